#pragma once

// Small reverse-mode differentiation engine over dense row-major matrices.
//
// Every op records its parents and a backward closure when (and only when)
// one of its inputs requires a gradient. `backward(loss)` walks the graph in
// reverse topological order. Only the operations the canonicalization model
// needs are provided.

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "okgc/linalg.hpp"

namespace okgc::ad {

struct Node {
  Matrix value;
  Matrix grad;  // empty until something flows into it
  bool requires_grad = false;
  std::string_view op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  void accumulate(const Matrix& g);
};

class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  const Matrix& value() const { return node_->value; }
  Matrix& mutable_value() { return node_->value; }
  const Matrix& grad() const { return node_->grad; }
  Matrix& mutable_grad() { return node_->grad; }
  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }
  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }
  double item() const;
  bool valid() const { return static_cast<bool>(node_); }
  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// Disables graph recording on the current thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

Var constant(Matrix value);
Var leaf(Matrix value, bool requires_grad);
Var scalar_constant(double v);

// Reverse pass from a 1x1 loss. Throws ContractError on a non-scalar loss and
// NumericError when a gradient becomes non-finite.
void backward(const Var& loss);

// Linear algebra.
Var matmul(const Var& a, const Var& b);
Var add_row(const Var& x, const Var& row);  // x (n x m) + row (1 x m)
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double k);
Var add_scalar(const Var& a, double k);

// Elementwise nonlinearities.
Var tanh(const Var& a);
Var sigmoid(const Var& a);
Var log_sigmoid(const Var& a);
Var exp(const Var& a);
Var log(const Var& a);
Var square(const Var& a);
Var abs(const Var& a);
Var relu(const Var& a);
Var clamp(const Var& a, double lo, double hi);

// Reductions.
Var sum(const Var& a);
Var row_sum(const Var& a);
Var logsumexp_rows(const Var& a);
Var log_softmax_rows(const Var& a);
Var softmax_rows(const Var& a);

// Indexing.
Var gather_rows(const Var& a, const std::vector<Eigen::Index>& rows);
Var pick(const Var& a, const std::vector<Eigen::Index>& cols);  // out_i = a(i, cols[i])

// Row-wise circular correlation: out(i,k) = sum_j a(i,j) b(i,(j+k) mod d).
Var circular_correlation_rows(const Var& a, const Var& b);

// log N(z_i; mu_k, diag(exp(log_var_k))) for every row i and component k.
Var gaussian_log_density(const Var& z, const Var& means, const Var& log_vars);

// KL(N(mu_i, exp(lv_i)) || N(means_k, exp(log_vars_k))) for every (i, k).
Var diag_gaussian_kl(const Var& mu, const Var& log_var, const Var& means, const Var& log_vars);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator*(double k, const Var& a) { return scale(a, k); }

// Plain-vector circular correlation and convolution.
Vector circular_correlation_naive(const Vector& a, const Vector& b);
Vector circular_correlation_fft(const Vector& a, const Vector& b);
Vector circular_convolution_naive(const Vector& a, const Vector& b);
Vector circular_convolution_fft(const Vector& a, const Vector& b);
// FFT for d >= kFftMinDim, naive below.
Vector circular_correlation(const Vector& a, const Vector& b);
inline constexpr Eigen::Index kFftMinDim = 32;

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
};

// Named trainable tensors with Adam moments. Names keep insertion order.
class ParamStore {
 public:
  Var& add(const std::string& name, Matrix init);
  // Registers an existing leaf (used to differentiate through stored models).
  Var& add_var(const std::string& name, Var var);
  Var& get(const std::string& name);
  const Var& get(const std::string& name) const;
  bool contains(const std::string& name) const { return entries_.count(name) > 0; }
  const std::vector<std::string>& names() const { return order_; }

  void set_trainable(const std::string& name, bool on);
  void set_trainable(const std::vector<std::string>& names, bool on);
  void freeze_all();
  bool trainable(const std::string& name) const;

  // Trainable parameters get zero-filled gradients; frozen ones are cleared.
  void zero_grad();
  void clear_grad();
  long step_count(const std::string& name) const;

  friend void adam_step(ParamStore& params, const AdamConfig& cfg);

 private:
  struct Entry {
    Var var;
    Matrix m;
    Matrix v;
    long step = 0;
  };
  std::vector<std::string> order_;
  std::unordered_map<std::string, Entry> entries_;
};

// Bias-corrected Adam on every trainable parameter, then clears gradients.
// Throws ContractError if a trainable parameter has no gradient.
void adam_step(ParamStore& params, const AdamConfig& cfg);

}  // namespace okgc::ad
