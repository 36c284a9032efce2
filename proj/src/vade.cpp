#include "okgc/vade.hpp"

#include <cmath>

#include "okgc/errors.hpp"

namespace okgc {

namespace {

Matrix glorot(std::mt19937_64& rng, std::size_t fan_in, std::size_t fan_out) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> u(-bound, bound);
  Matrix w(static_cast<Eigen::Index>(fan_in), static_cast<Eigen::Index>(fan_out));
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = u(rng);
  return w;
}

ad::Var affine(const ad::ParamStore& store, const std::string& layer, const ad::Var& x) {
  return ad::add_row(ad::matmul(x, store.get(layer + "/W")), store.get(layer + "/b"));
}

void add_layer(ad::ParamStore& store, const std::string& layer, std::size_t in, std::size_t out,
               std::mt19937_64& rng) {
  store.add(layer + "/W", glorot(rng, in, out));
  store.add(layer + "/b", Matrix::Zero(1, static_cast<Eigen::Index>(out)));
}

std::vector<std::string> layer_params(const std::string& layer) {
  return {layer + "/W", layer + "/b"};
}

}  // namespace

void Vae::register_params(ad::ParamStore& store, const GaussianMixture& mixture,
                          std::mt19937_64& rng) const {
  mixture.validate();
  if (mixture.dim() != shape_.latent_dim)
    throw DimensionError("mixture dimension " + std::to_string(mixture.dim()) +
                         " != latent dimension " + std::to_string(shape_.latent_dim));
  std::size_t width = shape_.input_dim;
  for (std::size_t i = 0; i < shape_.hidden.size(); ++i) {
    add_layer(store, name("enc/" + std::to_string(i)), width, shape_.hidden[i], rng);
    width = shape_.hidden[i];
  }
  add_layer(store, name("enc/mu"), width, shape_.latent_dim, rng);
  add_layer(store, name("enc/logvar"), width, shape_.latent_dim, rng);

  width = shape_.latent_dim;
  for (std::size_t i = 0; i < shape_.hidden.size(); ++i) {
    const auto out = shape_.hidden[shape_.hidden.size() - 1 - i];
    add_layer(store, name("dec/" + std::to_string(i)), width, out, rng);
    width = out;
  }
  add_layer(store, name("dec/mu"), width, shape_.input_dim, rng);
  add_layer(store, name("dec/logvar"), width, shape_.input_dim, rng);

  store.add(name("gmm/pi_logits"), Matrix(mixture.pi.array().log().transpose()));
  store.add(name("gmm/means"), mixture.means);
  store.add(name("gmm/log_vars"), mixture.log_vars);
}

Vae::Gaussian Vae::encode(const ad::ParamStore& store, const ad::Var& x) const {
  if (static_cast<std::size_t>(x.cols()) != shape_.input_dim)
    throw DimensionError("encoder input width " + std::to_string(x.cols()) + " != " +
                         std::to_string(shape_.input_dim));
  ad::Var h = x;
  for (std::size_t i = 0; i < shape_.hidden.size(); ++i)
    h = ad::tanh(affine(store, name("enc/" + std::to_string(i)), h));
  return {affine(store, name("enc/mu"), h),
          ad::clamp(affine(store, name("enc/logvar"), h), kMinLogVar, kMaxLogVar)};
}

Vae::Gaussian Vae::decode(const ad::ParamStore& store, const ad::Var& z) const {
  ad::Var h = z;
  for (std::size_t i = 0; i < shape_.hidden.size(); ++i)
    h = ad::tanh(affine(store, name("dec/" + std::to_string(i)), h));
  return {affine(store, name("dec/mu"), h),
          ad::clamp(affine(store, name("dec/logvar"), h), kMinLogVar, kMaxLogVar)};
}

ad::Var Vae::log_pi(const ad::ParamStore& store) const {
  return ad::log_softmax_rows(store.get(name("gmm/pi_logits")));
}

ad::Var Vae::means(const ad::ParamStore& store) const { return store.get(name("gmm/means")); }

ad::Var Vae::log_vars(const ad::ParamStore& store) const {
  return ad::clamp(store.get(name("gmm/log_vars")), kMinLogVar, kMaxLogVar);
}

GaussianMixture Vae::mixture(const ad::ParamStore& store) const {
  ad::NoGradGuard guard;
  GaussianMixture gm;
  gm.pi = log_pi(store).value().row(0).transpose().array().exp();
  gm.means = means(store).value();
  gm.log_vars = log_vars(store).value();
  return gm;
}

std::size_t Vae::num_components(const ad::ParamStore& store) const {
  return static_cast<std::size_t>(store.get(name("gmm/means")).rows());
}

std::vector<std::string> Vae::encoder_params() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < shape_.hidden.size(); ++i)
    for (auto& p : layer_params(name("enc/" + std::to_string(i)))) out.push_back(p);
  for (auto& p : layer_params(name("enc/mu"))) out.push_back(p);
  for (auto& p : layer_params(name("enc/logvar"))) out.push_back(p);
  return out;
}

std::vector<std::string> Vae::decoder_params() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < shape_.hidden.size(); ++i)
    for (auto& p : layer_params(name("dec/" + std::to_string(i)))) out.push_back(p);
  for (auto& p : layer_params(name("dec/mu"))) out.push_back(p);
  for (auto& p : layer_params(name("dec/logvar"))) out.push_back(p);
  return out;
}

std::vector<std::string> Vae::mixture_params() const {
  return {name("gmm/pi_logits"), name("gmm/means"), name("gmm/log_vars")};
}

ad::Var reparametrize(const ad::Var& mu, const ad::Var& log_var, const Matrix& eps) {
  if (eps.rows() != mu.rows() || eps.cols() != mu.cols())
    throw DimensionError("reparametrize: eps shape mismatch");
  return ad::add(mu, ad::mul(ad::exp(ad::scale(log_var, 0.5)), ad::constant(eps)));
}

ad::Var log_cluster_posterior(const ad::Var& z, const ad::Var& log_pi, const ad::Var& means,
                              const ad::Var& log_vars) {
  return ad::log_softmax_rows(ad::add_row(ad::gaussian_log_density(z, means, log_vars), log_pi));
}

Vector cluster_posterior(const Vector& z, const GaussianMixture& gmm) {
  gmm.validate();
  ad::NoGradGuard guard;
  Matrix log_pi = gmm.pi.array().log().transpose();
  auto lg = log_cluster_posterior(ad::constant(z.transpose()), ad::constant(log_pi),
                                  ad::constant(gmm.means), ad::constant(gmm.log_vars));
  return lg.value().row(0).transpose().array().exp();
}

ElboTerms elbo_loss(const Vae& vae, const ad::ParamStore& store, const ad::Var& x,
                    const Matrix& eps) {
  auto q = vae.encode(store, x);
  auto z = reparametrize(q.mu, q.log_var, eps);
  auto px = vae.decode(store, z);

  // 0.5 * sum_j [log 2pi + log sigma_x^2 + (x - mu_x)^2 / sigma_x^2]
  const double d = static_cast<double>(x.cols());
  auto resid = ad::square(ad::sub(x, px.mu));
  auto per_dim = ad::add(px.log_var, ad::mul(resid, ad::exp(ad::scale(px.log_var, -1.0))));
  ElboTerms t;
  t.recon = ad::add_scalar(ad::scale(ad::sum(per_dim), 0.5),
                           0.5 * d * static_cast<double>(x.rows()) * std::log(2.0 * M_PI));

  auto log_pi = vae.log_pi(store);
  auto log_gamma = log_cluster_posterior(z, log_pi, vae.means(store), vae.log_vars(store));
  auto gamma = ad::exp(log_gamma);
  auto kl = ad::diag_gaussian_kl(q.mu, q.log_var, vae.means(store), vae.log_vars(store));
  t.kl_gauss = ad::sum(ad::mul(gamma, kl));
  // gamma * log(gamma / pi); log_gamma is finite so 0 * log 0 contributes 0.
  t.kl_cat = ad::sum(ad::mul(gamma, ad::add_row(log_gamma, ad::scale(log_pi, -1.0))));
  t.total = ad::add(ad::add(t.recon, t.kl_gauss), t.kl_cat);
  for (auto [label, v] : {std::pair{"reconstruction", &t.recon}, {"kl_gauss", &t.kl_gauss},
                          {"kl_cat", &t.kl_cat}})
    if (!std::isfinite(v->item()))
      throw NumericError(std::string("non-finite ELBO term: ") + label);
  return t;
}

ad::Var nll_loss(const Vae& vae, const ad::ParamStore& store, const ad::Var& x,
                 const Matrix& eps, const std::vector<std::uint32_t>& labels) {
  if (static_cast<Eigen::Index>(labels.size()) != x.rows())
    throw DimensionError("nll_loss: one label per row required");
  const auto k = vae.num_components(store);
  std::vector<Eigen::Index> cols;
  cols.reserve(labels.size());
  for (auto l : labels) {
    if (l >= k) throw ContractError("nll_loss: label " + std::to_string(l) + " >= K");
    cols.push_back(static_cast<Eigen::Index>(l));
  }
  auto q = vae.encode(store, x);
  auto z = reparametrize(q.mu, q.log_var, eps);
  auto log_gamma = log_cluster_posterior(z, vae.log_pi(store), vae.means(store), vae.log_vars(store));
  return ad::scale(ad::sum(ad::pick(log_gamma, cols)), -1.0);
}

std::vector<std::uint32_t> argmax_rows(const Matrix& scores) {
  std::vector<std::uint32_t> out(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < scores.cols(); ++c)
      if (scores(i, c) > scores(i, best)) best = c;
    out[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(best);
  }
  return out;
}

std::vector<std::uint32_t> assign(const Vae& vae, const ad::ParamStore& store, const Matrix& x) {
  ad::NoGradGuard guard;
  return assign_codes(vae, store, vae.encode(store, ad::constant(x)).mu.value());
}

std::vector<std::uint32_t> assign_codes(const Vae& vae, const ad::ParamStore& store,
                                        const Matrix& z) {
  ad::NoGradGuard guard;
  auto joint = ad::add_row(
      ad::gaussian_log_density(ad::constant(z), vae.means(store), vae.log_vars(store)),
      vae.log_pi(store));
  return argmax_rows(joint.value());
}

ad::Var l1_norm(const ad::ParamStore& store, const std::vector<std::string>& names) {
  ad::Var acc = ad::scalar_constant(0.0);
  for (const auto& n : names) acc = ad::add(acc, ad::sum(ad::abs(store.get(n))));
  return acc;
}

Matrix standard_normal(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = n01(rng);
  return m;
}

}  // namespace okgc
