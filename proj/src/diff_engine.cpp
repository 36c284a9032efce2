#include "okgc/diff_engine.hpp"

#include <cmath>
#include <numbers>
#include <unordered_set>

#include "okgc/errors.hpp"

namespace okgc::ad {

namespace {

thread_local bool g_grad_enabled = true;

using Parents = std::vector<std::shared_ptr<Node>>;

// Builds the output node; drops the backward closure when nothing upstream
// needs a gradient.
Var make(Matrix value, std::string_view op, Parents parents,
         std::function<void(Node&)> backward_fn) {
  if (!value.allFinite())
    throw NumericError("non-finite value produced by '" + std::string(op) + "'");
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->op = op;
  bool needs = false;
  if (g_grad_enabled)
    for (const auto& p : parents) needs = needs || p->requires_grad;
  if (needs) {
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->backward_fn = std::move(backward_fn);
  }
  return Var(std::move(node));
}

void require_same_shape(const Var& a, const Var& b, std::string_view op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError(std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) +
                         "x" + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                         "x" + std::to_string(b.cols()) + ")");
}

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2*pi)
// Upstream gradients below this are skipped in the O(n*K*d) kernels; their
// products land in subnormal range, which is slow and numerically irrelevant.
constexpr double kNegligibleGrad = 1e-200;

}  // namespace

void Node::accumulate(const Matrix& g) {
  if (grad.size() == 0)
    grad = g;
  else
    grad += g;
}

double Var::item() const {
  if (rows() != 1 || cols() != 1) throw ContractError("item() on a non-scalar tensor");
  return value()(0, 0);
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Var constant(Matrix value) { return leaf(std::move(value), false); }

Var leaf(Matrix value, bool requires_grad) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = requires_grad;
  return Var(std::move(node));
}

Var scalar_constant(double v) { return constant(Matrix::Constant(1, 1, v)); }

void backward(const Var& loss) {
  if (!loss.valid() || loss.rows() != 1 || loss.cols() != 1)
    throw ContractError("backward() needs a scalar (1x1) loss");
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{loss.node().get(), 0}};
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  loss.node()->accumulate(Matrix::Ones(1, 1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (!n->backward_fn || n->grad.size() == 0) continue;
    n->backward_fn(*n);
    if (!n->parents.empty()) n->grad.resize(0, 0);  // interior grads are not needed again
  }
  for (Node* n : order)
    if (n->parents.empty() && n->grad.size() && !n->grad.allFinite())
      throw NumericError("non-finite gradient reached a leaf");
}

// ---------------------------------------------------------------- linear ops

Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows())
    throw DimensionError("matmul: inner dimensions " + std::to_string(a.cols()) + " vs " +
                         std::to_string(b.rows()));
  Matrix out = a.value() * b.value();
  return make(std::move(out), "matmul", {a.node(), b.node()}, [](Node& self) {
    auto& a = *self.parents[0];
    auto& b = *self.parents[1];
    if (a.requires_grad) a.accumulate(self.grad * b.value.transpose());
    if (b.requires_grad) b.accumulate(a.value.transpose() * self.grad);
  });
}

Var add_row(const Var& x, const Var& row) {
  if (row.rows() != 1 || row.cols() != x.cols())
    throw DimensionError("add_row: row must be 1 x " + std::to_string(x.cols()));
  Matrix out = x.value().rowwise() + row.value().row(0);
  return make(std::move(out), "add_row", {x.node(), row.node()}, [](Node& self) {
    auto& x = *self.parents[0];
    auto& r = *self.parents[1];
    if (x.requires_grad) x.accumulate(self.grad);
    if (r.requires_grad) r.accumulate(self.grad.colwise().sum());
  });
}

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  return make(a.value() + b.value(), "add", {a.node(), b.node()}, [](Node& self) {
    for (auto& p : self.parents)
      if (p->requires_grad) p->accumulate(self.grad);
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  return make(a.value() - b.value(), "sub", {a.node(), b.node()}, [](Node& self) {
    auto& a = *self.parents[0];
    auto& b = *self.parents[1];
    if (a.requires_grad) a.accumulate(self.grad);
    if (b.requires_grad) b.accumulate(-self.grad);
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a, b, "mul");
  Matrix out = a.value().cwiseProduct(b.value());
  return make(std::move(out), "mul", {a.node(), b.node()}, [](Node& self) {
    auto& a = *self.parents[0];
    auto& b = *self.parents[1];
    if (a.requires_grad) a.accumulate(self.grad.cwiseProduct(b.value));
    if (b.requires_grad) b.accumulate(self.grad.cwiseProduct(a.value));
  });
}

Var scale(const Var& a, double k) {
  return make(a.value() * k, "scale", {a.node()},
              [k](Node& self) { self.parents[0]->accumulate(self.grad * k); });
}

Var add_scalar(const Var& a, double k) {
  Matrix out = a.value().array() + k;
  return make(std::move(out), "add_scalar", {a.node()},
              [](Node& self) { self.parents[0]->accumulate(self.grad); });
}

// ---------------------------------------------------------- elementwise ops

Var tanh(const Var& a) {
  Matrix out = a.value().array().tanh();
  return make(std::move(out), "tanh", {a.node()}, [](Node& self) {
    Matrix d = 1.0 - self.value.array().square();
    self.parents[0]->accumulate(self.grad.cwiseProduct(d));
  });
}

namespace {
double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}
}  // namespace

Var sigmoid(const Var& a) {
  Matrix out = a.value().unaryExpr([](double x) { return stable_sigmoid(x); });
  return make(std::move(out), "sigmoid", {a.node()}, [](Node& self) {
    Matrix d = self.value.array() * (1.0 - self.value.array());
    self.parents[0]->accumulate(self.grad.cwiseProduct(d));
  });
}

Var log_sigmoid(const Var& a) {
  Matrix out = a.value().unaryExpr(
      [](double x) { return std::min(x, 0.0) - std::log1p(std::exp(-std::abs(x))); });
  return make(std::move(out), "log_sigmoid", {a.node()}, [](Node& self) {
    auto& p = *self.parents[0];
    Matrix d = p.value.unaryExpr([](double x) { return stable_sigmoid(-x); });
    p.accumulate(self.grad.cwiseProduct(d));
  });
}

Var exp(const Var& a) {
  Matrix out = a.value().array().exp();
  return make(std::move(out), "exp", {a.node()}, [](Node& self) {
    self.parents[0]->accumulate(self.grad.cwiseProduct(self.value));
  });
}

Var log(const Var& a) {
  Matrix out = a.value().array().log();
  return make(std::move(out), "log", {a.node()}, [](Node& self) {
    auto& p = *self.parents[0];
    p.accumulate(self.grad.cwiseQuotient(p.value));
  });
}

Var square(const Var& a) {
  Matrix out = a.value().array().square();
  return make(std::move(out), "square", {a.node()}, [](Node& self) {
    auto& p = *self.parents[0];
    p.accumulate(2.0 * self.grad.cwiseProduct(p.value));
  });
}

Var abs(const Var& a) {
  Matrix out = a.value().cwiseAbs();
  return make(std::move(out), "abs", {a.node()}, [](Node& self) {
    auto& p = *self.parents[0];
    Matrix sign = p.value.unaryExpr([](double x) { return double((x > 0) - (x < 0)); });
    p.accumulate(self.grad.cwiseProduct(sign));
  });
}

Var relu(const Var& a) {
  Matrix out = a.value().cwiseMax(0.0);
  return make(std::move(out), "relu", {a.node()}, [](Node& self) {
    auto& p = *self.parents[0];
    Matrix mask = (p.value.array() > 0.0).cast<double>();
    p.accumulate(self.grad.cwiseProduct(mask));
  });
}

Var clamp(const Var& a, double lo, double hi) {
  Matrix out = a.value().cwiseMax(lo).cwiseMin(hi);
  return make(std::move(out), "clamp", {a.node()}, [lo, hi](Node& self) {
    auto& p = *self.parents[0];
    Matrix mask = ((p.value.array() >= lo) && (p.value.array() <= hi)).cast<double>();
    p.accumulate(self.grad.cwiseProduct(mask));
  });
}

// --------------------------------------------------------------- reductions

Var sum(const Var& a) {
  Matrix out = Matrix::Constant(1, 1, a.value().sum());
  return make(std::move(out), "sum", {a.node()}, [](Node& self) {
    auto& p = *self.parents[0];
    p.accumulate(Matrix::Constant(p.value.rows(), p.value.cols(), self.grad(0, 0)));
  });
}

Var row_sum(const Var& a) {
  Matrix out = a.value().rowwise().sum();
  return make(std::move(out), "row_sum", {a.node()}, [](Node& self) {
    auto& p = *self.parents[0];
    Matrix g = self.grad.replicate(1, p.value.cols());
    p.accumulate(g);
  });
}

namespace {
Matrix log_softmax_value(const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double m = x.row(i).maxCoeff();
    const double lse = m + std::log((x.row(i).array() - m).exp().sum());
    out.row(i) = x.row(i).array() - lse;
  }
  return out;
}
}  // namespace

Var logsumexp_rows(const Var& a) {
  const Matrix& x = a.value();
  Matrix out(x.rows(), 1);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double m = x.row(i).maxCoeff();
    out(i, 0) = m + std::log((x.row(i).array() - m).exp().sum());
  }
  return make(std::move(out), "logsumexp_rows", {a.node()}, [](Node& self) {
    auto& p = *self.parents[0];
    Matrix soft = (p.value.colwise() - self.value.col(0)).array().exp();
    p.accumulate(soft.array().colwise() * self.grad.col(0).array());
  });
}

Var log_softmax_rows(const Var& a) {
  return make(log_softmax_value(a.value()), "log_softmax_rows", {a.node()}, [](Node& self) {
    Matrix soft = self.value.array().exp();
    Matrix g = self.grad - (soft.array().colwise() * self.grad.rowwise().sum().array()).matrix();
    self.parents[0]->accumulate(g);
  });
}

Var softmax_rows(const Var& a) {
  Matrix out = log_softmax_value(a.value()).array().exp();
  return make(std::move(out), "softmax_rows", {a.node()}, [](Node& self) {
    const Matrix& s = self.value;
    Eigen::VectorXd dot = self.grad.cwiseProduct(s).rowwise().sum();
    Matrix g = s.cwiseProduct(self.grad - dot.replicate(1, s.cols()));
    self.parents[0]->accumulate(g);
  });
}

// ----------------------------------------------------------------- indexing

Var gather_rows(const Var& a, const std::vector<Eigen::Index>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), a.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= a.rows()) throw DimensionError("gather_rows: index out of range");
    out.row(static_cast<Eigen::Index>(i)) = a.value().row(rows[i]);
  }
  return make(std::move(out), "gather_rows", {a.node()}, [rows](Node& self) {
    auto& p = *self.parents[0];
    Matrix g = Matrix::Zero(p.value.rows(), p.value.cols());
    for (std::size_t i = 0; i < rows.size(); ++i)
      g.row(rows[i]) += self.grad.row(static_cast<Eigen::Index>(i));
    p.accumulate(g);
  });
}

Var pick(const Var& a, const std::vector<Eigen::Index>& cols) {
  if (static_cast<Eigen::Index>(cols.size()) != a.rows())
    throw DimensionError("pick: need one column index per row");
  Matrix out(a.rows(), 1);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const auto c = cols[static_cast<std::size_t>(i)];
    if (c < 0 || c >= a.cols()) throw DimensionError("pick: column index out of range");
    out(i, 0) = a.value()(i, c);
  }
  return make(std::move(out), "pick", {a.node()}, [cols](Node& self) {
    auto& p = *self.parents[0];
    Matrix g = Matrix::Zero(p.value.rows(), p.value.cols());
    for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, cols[static_cast<std::size_t>(i)]) = self.grad(i, 0);
    p.accumulate(g);
  });
}

// ------------------------------------------------------ circular correlation

Var circular_correlation_rows(const Var& a, const Var& b) {
  require_same_shape(a, b, "circular_correlation_rows");
  Matrix out(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    out.row(i) = circular_correlation(a.value().row(i).transpose(), b.value().row(i).transpose())
                     .transpose();
  return make(std::move(out), "circular_correlation_rows", {a.node(), b.node()},
              [](Node& self) {
                auto& a = *self.parents[0];
                auto& b = *self.parents[1];
                const auto d = self.value.cols();
                const bool fft = d >= kFftMinDim;
                Matrix ga, gb;
                if (a.requires_grad) ga.resize(self.value.rows(), d);
                if (b.requires_grad) gb.resize(self.value.rows(), d);
                for (Eigen::Index i = 0; i < self.value.rows(); ++i) {
                  const Vector g = self.grad.row(i).transpose();
                  if (a.requires_grad) {
                    const Vector bi = b.value.row(i).transpose();
                    ga.row(i) = (fft ? circular_correlation_fft(g, bi)
                                     : circular_correlation_naive(g, bi))
                                    .transpose();
                  }
                  if (b.requires_grad) {
                    const Vector ai = a.value.row(i).transpose();
                    gb.row(i) = (fft ? circular_convolution_fft(ai, g)
                                     : circular_convolution_naive(ai, g))
                                    .transpose();
                  }
                }
                if (a.requires_grad) a.accumulate(ga);
                if (b.requires_grad) b.accumulate(gb);
              });
}

// -------------------------------------------------------- Gaussian mixtures

Var gaussian_log_density(const Var& z, const Var& means, const Var& log_vars) {
  require_same_shape(means, log_vars, "gaussian_log_density");
  if (z.cols() != means.cols()) throw DimensionError("gaussian_log_density: latent dim mismatch");
  const Matrix& Z = z.value();
  const Matrix& M = means.value();
  const Matrix& LV = log_vars.value();
  const auto n = Z.rows();
  const auto k = M.rows();
  const auto d = Z.cols();
  Matrix inv_var = (-LV.array()).exp();
  Eigen::VectorXd lv_sum = LV.rowwise().sum();
  Matrix out(n, k);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index c = 0; c < k; ++c) {
      double q = 0.0;
      for (Eigen::Index j = 0; j < d; ++j) {
        const double diff = Z(i, j) - M(c, j);
        q += diff * diff * inv_var(c, j);
      }
      out(i, c) = -0.5 * (static_cast<double>(d) * kLog2Pi + lv_sum[c] + q);
    }
  return make(std::move(out), "gaussian_log_density", {z.node(), means.node(), log_vars.node()},
              [inv_var](Node& self) {
                auto& zn = *self.parents[0];
                auto& mn = *self.parents[1];
                auto& ln = *self.parents[2];
                const Matrix& Z = zn.value;
                const Matrix& M = mn.value;
                const auto n = Z.rows();
                const auto k = M.rows();
                const auto d = Z.cols();
                Matrix gz = Matrix::Zero(n, d);
                Matrix gm = Matrix::Zero(k, d);
                Matrix gl = Matrix::Zero(k, d);
                for (Eigen::Index i = 0; i < n; ++i)
                  for (Eigen::Index c = 0; c < k; ++c) {
                    const double g = self.grad(i, c);
                    if (std::abs(g) < kNegligibleGrad) continue;
                    for (Eigen::Index j = 0; j < d; ++j) {
                      const double diff = Z(i, j) - M(c, j);
                      const double s = diff * inv_var(c, j);
                      gz(i, j) -= g * s;
                      gm(c, j) += g * s;
                      gl(c, j) += g * (-0.5) * (1.0 - diff * s);
                    }
                  }
                if (zn.requires_grad) zn.accumulate(gz);
                if (mn.requires_grad) mn.accumulate(gm);
                if (ln.requires_grad) ln.accumulate(gl);
              });
}

Var diag_gaussian_kl(const Var& mu, const Var& log_var, const Var& means, const Var& log_vars) {
  require_same_shape(mu, log_var, "diag_gaussian_kl");
  require_same_shape(means, log_vars, "diag_gaussian_kl");
  if (mu.cols() != means.cols()) throw DimensionError("diag_gaussian_kl: latent dim mismatch");
  const Matrix& MU = mu.value();
  const Matrix& LV = log_var.value();
  const Matrix& M = means.value();
  const Matrix& L = log_vars.value();
  const auto n = MU.rows();
  const auto k = M.rows();
  const auto d = MU.cols();
  Matrix inv_var = (-L.array()).exp();
  Matrix var_t = LV.array().exp();
  Matrix out(n, k);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index c = 0; c < k; ++c) {
      double acc = 0.0;
      for (Eigen::Index j = 0; j < d; ++j) {
        const double diff = MU(i, j) - M(c, j);
        acc += L(c, j) - LV(i, j) + var_t(i, j) * inv_var(c, j) + diff * diff * inv_var(c, j) - 1.0;
      }
      out(i, c) = 0.5 * acc;
    }
  return make(std::move(out), "diag_gaussian_kl",
              {mu.node(), log_var.node(), means.node(), log_vars.node()},
              [inv_var, var_t](Node& self) {
                auto& mun = *self.parents[0];
                auto& lvn = *self.parents[1];
                auto& mn = *self.parents[2];
                auto& ln = *self.parents[3];
                const Matrix& MU = mun.value;
                const Matrix& M = mn.value;
                const auto n = MU.rows();
                const auto k = M.rows();
                const auto d = MU.cols();
                Matrix gmu = Matrix::Zero(n, d), glv = Matrix::Zero(n, d);
                Matrix gm = Matrix::Zero(k, d), gl = Matrix::Zero(k, d);
                for (Eigen::Index i = 0; i < n; ++i)
                  for (Eigen::Index c = 0; c < k; ++c) {
                    const double g = self.grad(i, c);
                    if (std::abs(g) < kNegligibleGrad) continue;
                    for (Eigen::Index j = 0; j < d; ++j) {
                      const double diff = MU(i, j) - M(c, j);
                      const double iv = inv_var(c, j);
                      gmu(i, j) += g * diff * iv;
                      gm(c, j) -= g * diff * iv;
                      glv(i, j) += g * 0.5 * (var_t(i, j) * iv - 1.0);
                      gl(c, j) += g * 0.5 * (1.0 - (var_t(i, j) + diff * diff) * iv);
                    }
                  }
                if (mun.requires_grad) mun.accumulate(gmu);
                if (lvn.requires_grad) lvn.accumulate(glv);
                if (mn.requires_grad) mn.accumulate(gm);
                if (ln.requires_grad) ln.accumulate(gl);
              });
}

}  // namespace okgc::ad
