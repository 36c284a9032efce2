#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "fd_check.hpp"
#include "okgc/errors.hpp"
#include "okgc/kge.hpp"

using namespace okgc;
using okgc::testing::grad_check;
using okgc::testing::random_matrix;

namespace {

// Two single-layer-free VAEs (mu = x W + b) over a shared store.
struct Toy {
  Vae ent{"entity", {3, {}, 2}};
  Vae rel{"relation", {3, {}, 2}};
  ad::ParamStore store;
  Matrix ent_lookup;
  Matrix rel_lookup;

  KgeInputs inputs() const {
    return {&ent, &rel, &store, ad::constant(ent_lookup), ad::constant(rel_lookup)};
  }
};

GaussianMixture random_mixture(std::mt19937_64& rng, Eigen::Index k, Eigen::Index d) {
  GaussianMixture gm;
  Vector w = random_matrix(rng, k, 1, 0.5, 1.5).col(0);
  gm.pi = w / w.sum();
  gm.means = random_matrix(rng, k, d, -1, 1);
  gm.log_vars = random_matrix(rng, k, d, -0.5, 0.5);
  return gm;
}

Toy make_toy(std::uint64_t seed, Eigen::Index n_ent = 5, Eigen::Index n_rel = 3) {
  std::mt19937_64 rng(seed);
  Toy t;
  t.ent.register_params(t.store, random_mixture(rng, 3, 2), rng);
  t.rel.register_params(t.store, random_mixture(rng, 2, 2), rng);
  t.ent_lookup = random_matrix(rng, n_ent, 3);
  t.rel_lookup = random_matrix(rng, n_rel, 3);
  return t;
}

Vector naive_corr(const Vector& a, const Vector& b) {
  const auto d = a.size();
  Vector out = Vector::Zero(d);
  for (Eigen::Index k = 0; k < d; ++k)
    for (Eigen::Index i = 0; i < d; ++i) out[k] += a[i] * b[(i + k) % d];
  return out;
}

// Plain-Eigen representation: softmax(tau * posterior(mu)) * means.
Vector oracle_rep(const Vae& vae, const ad::ParamStore& s, const Vector& x, double tau) {
  const std::string p = vae.prefix();
  Vector mu = (x.transpose() * s.get(p + "/enc/mu/W").value()).transpose() +
              s.get(p + "/enc/mu/b").value().row(0).transpose();
  Vector logits = s.get(p + "/gmm/pi_logits").value().row(0).transpose();
  Vector pi = logits.array().exp() / logits.array().exp().sum();
  Matrix M = s.get(p + "/gmm/means").value();
  Matrix L = s.get(p + "/gmm/log_vars").value();
  Vector joint(M.rows());
  for (Eigen::Index c = 0; c < M.rows(); ++c) {
    double dens = pi[c];
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      const double var = std::exp(L(c, j));
      const double r = mu[j] - M(c, j);
      dens *= std::exp(-0.5 * r * r / var) / std::sqrt(2 * M_PI * var);
    }
    joint[c] = dens;
  }
  Vector gamma = joint / joint.sum();
  Vector w = (tau * (gamma.array() - gamma.maxCoeff())).exp();
  w /= w.sum();
  return M.transpose() * w;
}

}  // namespace

TEST_CASE("soft argmax spot values") {
  Vector c(3);
  c << 0.2, 0.5, 0.3;
  Vector v = soft_argmax(c, 1e5);
  CHECK(v[1] >= 1.0 - 1e-6);
  Vector::Index arg;
  v.maxCoeff(&arg);
  CHECK(arg == 1);

  Vector u = soft_argmax(c, 1e-12);
  for (Eigen::Index i = 0; i < 3; ++i) CHECK(u[i] == doctest::Approx(1.0 / 3.0).epsilon(1e-9));

  Vector tie(2);
  tie << 0.5, 0.5;
  for (double tau : {1e-3, 1.0, 1e5}) {
    Vector t = soft_argmax(tie, tau);
    CHECK(t[0] == doctest::Approx(0.5));
    CHECK(t[1] == doctest::Approx(0.5));
  }
  CHECK_THROWS_AS(SoftArgmaxConfig{0.0}.validate(), ConfigError);
}

TEST_CASE("soft argmax sums to one and ignores shifts") {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 100; ++t) {
    Vector c = random_matrix(rng, 6, 1, 0, 1).col(0);
    for (double tau : {0.5, 10.0, 1e5}) {
      Vector a = soft_argmax(c, tau);
      Vector b = soft_argmax((c.array() + 3.7).matrix(), tau);
      CHECK(std::abs(a.sum() - 1.0) < 1e-12);
      CHECK((a - b).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
}

TEST_CASE("soft argmax distance to one-hot follows the closed form") {
  // Two components with gap g: the loser gets exactly 1 / (1 + e^{tau g}).
  const double tau = 1e5;
  for (double gap : {1e-4, 1.5e-4, 2e-4, 5e-4}) {
    Vector c(2);
    c << 0.5 + gap, 0.5;
    Vector v = soft_argmax(c, tau);
    const double expected = 1.0 / (1.0 + std::exp(tau * gap));
    CHECK(v[1] == doctest::Approx(expected).epsilon(1e-9));
  }
  // Gap needed for the 1e-6 bound with K components: log((K-1) 1e6) / tau.
  std::mt19937_64 rng(2);
  for (int t = 0; t < 100; ++t) {
    const Eigen::Index k = 2 + t % 8;
    Vector c = random_matrix(rng, k, 1, 0, 0.5).col(0);
    Eigen::Index arg;
    c.maxCoeff(&arg);
    c[arg] += std::log(double(k - 1) * 1e6) / tau + 1e-6;
    Vector v = soft_argmax(c, tau);
    Vector onehot = Vector::Zero(k);
    onehot[arg] = 1.0;
    CHECK((v - onehot).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("soft argmax gradient matches finite differences") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    Matrix c = random_matrix(rng, 3, 4);
    Matrix w = random_matrix(rng, 3, 4);
    const double err = grad_check({c}, [&](const std::vector<ad::Var>& v) {
      return ad::sum(ad::mul(soft_argmax_rows(v[0], 2.5), ad::constant(w)));
    });
    CHECK(err < 1e-4);
  }
}

TEST_CASE("zero relation representation scores one half") {
  auto toy = make_toy(4);
  toy.store.get("relation/gmm/means").mutable_value().setZero();
  Vector s = triple_scores(toy.inputs(), {{0, 0, 1}, {2, 1, 3}, {4, 2, 4}}, {});
  for (Eigen::Index i = 0; i < s.size(); ++i) CHECK(s[i] == 0.5);
  auto loss = kge_loss(toy.inputs(), {{0, 0, 1}}, {{2, 0, 1}, {0, 0, 3}}, {});
  CHECK(loss.item() == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("one-hot toy scores equal HolE of the selected means") {
  Toy t;
  std::mt19937_64 rng(5);
  GaussianMixture ge, gr;
  ge.pi = Vector::Constant(2, 0.5);
  ge.means = Matrix(2, 2);
  ge.means << 3, 0, 0, 3;
  ge.log_vars = Matrix::Constant(2, 2, -2.0);
  gr.pi = Vector::Constant(2, 0.5);
  gr.means = Matrix(2, 2);
  gr.means << 0.4, -0.2, -0.3, 0.7;
  gr.log_vars = Matrix::Constant(2, 2, -2.0);
  t.ent = Vae("entity", {2, {}, 2});
  t.rel = Vae("relation", {2, {}, 2});
  t.ent.register_params(t.store, ge, rng);
  t.rel.register_params(t.store, gr, rng);
  for (auto* p : {"entity/enc/mu/W", "relation/enc/mu/W"})
    t.store.get(p).mutable_value() = Matrix::Identity(2, 2);
  for (auto* p : {"entity/enc/mu/b", "relation/enc/mu/b"}) t.store.get(p).mutable_value().setZero();
  // Lookup rows sit on the component means, so posteriors are one-hot.
  t.ent_lookup = ge.means;
  t.rel_lookup = gr.means;

  std::vector<Triple> triples{{0, 0, 1}, {1, 1, 0}, {0, 1, 0}, {1, 0, 1}};
  Vector s = triple_scores(t.inputs(), triples, {});
  for (std::size_t i = 0; i < triples.size(); ++i) {
    Vector h = ge.means.row(triples[i].head).transpose();
    Vector r = gr.means.row(triples[i].rel).transpose();
    Vector tl = ge.means.row(triples[i].tail).transpose();
    const double logit = r.dot(naive_corr(h, tl));
    CHECK(s[static_cast<Eigen::Index>(i)] ==
          doctest::Approx(1.0 / (1.0 + std::exp(-logit))).epsilon(1e-12));
  }
}

TEST_CASE("triple logits agree with a plain evaluation") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto toy = make_toy(100 + seed);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<MentionId> e(0, 4), r(0, 2);
    std::vector<Triple> triples;
    for (int i = 0; i < 6; ++i) triples.push_back({e(rng), r(rng), e(rng)});
    for (double tau : {1.0, 1e5}) {
      ad::NoGradGuard guard;
      Matrix got = triple_logits(toy.inputs(), triples, {tau}).value();
      Matrix got_transe = triple_logits(toy.inputs(), triples, {tau}, KgeLossKind::kTransE).value();
      for (std::size_t i = 0; i < triples.size(); ++i) {
        Vector h = oracle_rep(toy.ent, toy.store, toy.ent_lookup.row(triples[i].head).transpose(), tau);
        Vector rr = oracle_rep(toy.rel, toy.store, toy.rel_lookup.row(triples[i].rel).transpose(), tau);
        Vector tl = oracle_rep(toy.ent, toy.store, toy.ent_lookup.row(triples[i].tail).transpose(), tau);
        const auto row = static_cast<Eigen::Index>(i);
        CHECK(std::abs(got(row, 0) - rr.dot(naive_corr(h, tl))) < 1e-10);
        CHECK(std::abs(got_transe(row, 0) + (h + rr - tl).squaredNorm()) < 1e-10);
      }
    }
  }
}

TEST_CASE("scores stay inside the open unit interval") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto toy = make_toy(200 + seed);
    Vector s = triple_scores(toy.inputs(), {{0, 0, 1}, {3, 2, 4}}, {});
    CHECK((s.array() > 0.0).all());
    CHECK((s.array() < 1.0).all());
  }
}

TEST_CASE("confident positives and negatives drive the loss to zero") {
  // One latent dimension: corr reduces to a product, logit = r h t.
  Toy t;
  std::mt19937_64 rng(6);
  GaussianMixture ge, gr;
  ge.pi = Vector::Constant(2, 0.5);
  ge.means = Matrix(2, 1);
  ge.means << 10, -10;
  ge.log_vars = Matrix::Constant(2, 1, -4.0);
  gr.pi = Vector::Ones(1);
  gr.means = Matrix::Constant(1, 1, 10.0);
  gr.log_vars = Matrix::Constant(1, 1, -4.0);
  t.ent = Vae("entity", {1, {}, 1});
  t.rel = Vae("relation", {1, {}, 1});
  t.ent.register_params(t.store, ge, rng);
  t.rel.register_params(t.store, gr, rng);
  for (auto* p : {"entity/enc/mu/W", "relation/enc/mu/W"})
    t.store.get(p).mutable_value() = Matrix::Ones(1, 1);
  for (auto* p : {"entity/enc/mu/b", "relation/enc/mu/b"}) t.store.get(p).mutable_value().setZero();
  t.ent_lookup = ge.means;
  t.rel_lookup = gr.means;
  auto loss = kge_loss(t.inputs(), {{0, 0, 0}}, {{1, 0, 0}, {0, 0, 1}}, {});
  CHECK(loss.item() < 1e-12);
  auto margin = kge_loss(t.inputs(), {{0, 0, 0}}, {{1, 0, 0}, {0, 0, 1}}, {}, KgeLossKind::kMargin);
  CHECK(margin.item() == 0.0);
}

TEST_CASE("margin loss equals the averaged hinge on logits") {
  auto toy = make_toy(7);
  std::vector<Triple> pos{{0, 0, 1}, {2, 1, 3}};
  std::vector<Triple> neg{{4, 0, 1}, {0, 0, 2}, {2, 1, 0}, {1, 1, 3}};
  ad::NoGradGuard guard;
  Matrix lp = triple_logits(toy.inputs(), pos, {1.0}).value();
  Matrix ln = triple_logits(toy.inputs(), neg, {1.0}).value();
  double expected = 0.0;
  for (int j = 0; j < 4; ++j) expected += std::max(0.0, 1.0 - lp(j / 2, 0) + ln(j, 0));
  expected /= 4.0;
  CHECK(kge_loss(toy.inputs(), pos, neg, {1.0}, KgeLossKind::kMargin).item() ==
        doctest::Approx(expected).epsilon(1e-12));

  double bce = 0.0;
  for (int i = 0; i < 2; ++i) bce -= std::log(1.0 / (1.0 + std::exp(-lp(i, 0))));
  for (int j = 0; j < 4; ++j) bce -= 0.5 * std::log(1.0 - 1.0 / (1.0 + std::exp(-ln(j, 0))));
  CHECK(kge_loss(toy.inputs(), pos, neg, {1.0}).item() == doctest::Approx(bce / 2.0).epsilon(1e-12));
}

TEST_CASE("KGE loss gradient matches finite differences") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto toy = make_toy(300 + seed);
    std::mt19937_64 rng(seed);
    std::vector<Triple> pos{{0, 0, 1}, {2, 1, 3}, {4, 2, 0}};
    auto neg = sample_negatives(pos, 5, {3}, rng);
    const auto kind = static_cast<KgeLossKind>(seed % 3);
    std::vector<std::string> names{"entity/gmm/means", "relation/gmm/means", "entity/enc/mu/W",
                                   "relation/gmm/log_vars"};
    std::vector<Matrix> in{toy.ent_lookup, toy.rel_lookup};
    for (const auto& n : names) in.push_back(toy.store.get(n).value());
    const double err = grad_check(in, [&](const std::vector<ad::Var>& v) {
      ad::ParamStore s;
      for (const auto& n : toy.store.names()) {
        auto it = std::find(names.begin(), names.end(), n);
        s.add_var(n, it == names.end() ? ad::constant(toy.store.get(n).value())
                                       : v[2 + static_cast<std::size_t>(it - names.begin())]);
      }
      KgeInputs ki{&toy.ent, &toy.rel, &s, v[0], v[1]};
      // Moderate temperature so the selector has a non-vanishing gradient.
      return kge_loss(ki, pos, neg, {3.0}, kind);
    });
    CHECK(err < 1e-4);
  }
}

TEST_CASE("negative sampling contract") {
  std::vector<Triple> pos{{0, 0, 1}, {2, 1, 3}, {4, 2, 4}};
  std::mt19937_64 a(9), b(9);
  auto n1 = sample_negatives(pos, 5, {20}, a);
  auto n2 = sample_negatives(pos, 5, {20}, b);
  CHECK(n1 == n2);
  REQUIRE(n1.size() == 60);
  int heads = 0;
  for (std::size_t j = 0; j < n1.size(); ++j) {
    const auto& p = pos[j / 20];
    const auto& n = n1[j];
    CHECK(n.rel == p.rel);
    const bool head_changed = n.head != p.head;
    const bool tail_changed = n.tail != p.tail;
    CHECK(head_changed != tail_changed);
    CHECK(n.head < 5);
    CHECK(n.tail < 5);
    heads += head_changed;
  }
  CHECK(heads > 10);
  CHECK(heads < 50);

  std::mt19937_64 rng(1);
  CHECK_THROWS_AS(sample_negatives(pos, 1, {20}, rng), ConfigError);
  CHECK_THROWS_AS(sample_negatives(pos, 5, {0}, rng), ConfigError);
  CHECK(parse_kge_loss("margin") == KgeLossKind::kMargin);
  CHECK_THROWS_AS(parse_kge_loss("rescal"), ConfigError);
}

TEST_CASE("same seed gives the same KGE loss") {
  auto toy = make_toy(10);
  std::vector<Triple> pos{{0, 0, 1}, {2, 1, 3}};
  std::mt19937_64 a(3), b(3);
  auto l1 = kge_loss(toy.inputs(), pos, sample_negatives(pos, 5, {20}, a), {}).item();
  auto l2 = kge_loss(toy.inputs(), pos, sample_negatives(pos, 5, {20}, b), {}).item();
  CHECK(l1 == l2);
}
