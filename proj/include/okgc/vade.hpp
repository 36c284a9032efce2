#pragma once

// Variational autoencoder with a Gaussian-mixture latent prior.
//
// Encoder: x -> tanh(affine) for each hidden width -> two affine heads giving
// the posterior mean and log-variance of q(z|x). Decoder mirrors the hidden
// widths and ends in two heads for the mean and log-variance of p(x|z).
// The mixture (weights via softmax logits, means, log-variances) lives in the
// same parameter store under the VAE's prefix.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "okgc/cluster_init.hpp"
#include "okgc/diff_engine.hpp"

namespace okgc {

struct VaeShape {
  std::size_t input_dim = 768;
  std::vector<std::size_t> hidden = {768, 384};
  std::size_t latent_dim = 100;
};

class Vae {
 public:
  struct Gaussian {
    ad::Var mu;
    ad::Var log_var;
  };

  Vae() = default;
  Vae(std::string prefix, VaeShape shape) : prefix_(std::move(prefix)), shape_(std::move(shape)) {}

  // Adds randomly initialised network weights and `mixture` to `store`.
  void register_params(ad::ParamStore& store, const GaussianMixture& mixture,
                       std::mt19937_64& rng) const;

  Gaussian encode(const ad::ParamStore& store, const ad::Var& x) const;
  Gaussian decode(const ad::ParamStore& store, const ad::Var& z) const;

  ad::Var log_pi(const ad::ParamStore& store) const;      // 1 x K
  ad::Var means(const ad::ParamStore& store) const;       // K x d
  ad::Var log_vars(const ad::ParamStore& store) const;    // K x d, clamped

  GaussianMixture mixture(const ad::ParamStore& store) const;
  std::size_t num_components(const ad::ParamStore& store) const;

  std::vector<std::string> encoder_params() const;
  std::vector<std::string> decoder_params() const;
  std::vector<std::string> mixture_params() const;

  const VaeShape& shape() const { return shape_; }
  const std::string& prefix() const { return prefix_; }

 private:
  std::string name(const std::string& suffix) const { return prefix_ + "/" + suffix; }

  std::string prefix_;
  VaeShape shape_;
};

// z = mu + exp(log_var / 2) * eps
ad::Var reparametrize(const ad::Var& mu, const ad::Var& log_var, const Matrix& eps);

// log q(c|z) for every row of z: log-softmax over log pi_c + log N(z; mu_c, sigma_c^2).
ad::Var log_cluster_posterior(const ad::Var& z, const ad::Var& log_pi, const ad::Var& means,
                              const ad::Var& log_vars);

// Probability vector q(c|z) for a single latent point.
Vector cluster_posterior(const Vector& z, const GaussianMixture& gmm);

struct ElboTerms {
  ad::Var recon;     // sum over rows of the Gaussian reconstruction NLL
  ad::Var kl_gauss;  // sum over rows of E_q(c)[KL(q(z|x) || p(z|c))]
  ad::Var kl_cat;    // sum over rows of KL(q(c|x) || pi)
  ad::Var total;     // negative ELBO
};

// Negative ELBO summed over the rows of x, one Monte Carlo sample per row.
ElboTerms elbo_loss(const Vae& vae, const ad::ParamStore& store, const ad::Var& x,
                    const Matrix& eps);

// Sum over rows of -log q(label_i | z_i).
ad::Var nll_loss(const Vae& vae, const ad::ParamStore& store, const ad::Var& x,
                 const Matrix& eps, const std::vector<std::uint32_t>& labels);

// Winners-take-all assignment using the posterior mean (eps = 0); ties go
// to the smallest component id.
std::vector<std::uint32_t> assign(const Vae& vae, const ad::ParamStore& store, const Matrix& x);

// Same rule applied directly to latent codes.
std::vector<std::uint32_t> assign_codes(const Vae& vae, const ad::ParamStore& store,
                                        const Matrix& z);

// Argmax of each row (first maximum wins).
std::vector<std::uint32_t> argmax_rows(const Matrix& scores);

// Sum of |w| over the named parameters.
ad::Var l1_norm(const ad::ParamStore& store, const std::vector<std::string>& names);

Matrix standard_normal(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols);

}  // namespace okgc
