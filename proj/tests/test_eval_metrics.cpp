#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <random>
#include <sstream>

#include "okgc/errors.hpp"
#include "okgc/eval_metrics.hpp"

using namespace okgc;

namespace {

Clustering make(std::vector<std::int64_t> labels) {
  return Clustering::from_labels(labels, Namespace::kEntity);
}

struct PairCounts {
  double hits = 0, pred = 0, gold = 0;
};

// O(n^2) enumeration over the universe.
PairCounts brute_pairs(const Clustering& p, const Clustering& g, const std::vector<MentionId>& u) {
  PairCounts c;
  for (std::size_t i = 0; i < u.size(); ++i)
    for (std::size_t j = i + 1; j < u.size(); ++j) {
      const bool sp = p.label(u[i]) == p.label(u[j]);
      const bool sg = g.label(u[i]) == g.label(u[j]);
      c.pred += sp;
      c.gold += sg;
      c.hits += sp && sg;
    }
  return c;
}

// Direct set-based macro precision: a predicted cluster is pure when every
// pair of its members shares a gold label.
double brute_macro(const Clustering& p, const Clustering& g, const std::vector<MentionId>& u) {
  std::map<std::uint32_t, std::vector<MentionId>> clusters;
  for (auto id : u) clusters[p.label(id)].push_back(id);
  if (clusters.empty()) return 1.0;
  double pure = 0;
  for (const auto& [l, members] : clusters) {
    bool ok = true;
    for (auto a : members)
      for (auto b : members) ok = ok && g.label(a) == g.label(b);
    pure += ok;
  }
  return pure / double(clusters.size());
}

double brute_micro(const Clustering& p, const Clustering& g, const std::vector<MentionId>& u) {
  std::map<std::uint32_t, std::vector<MentionId>> clusters;
  for (auto id : u) clusters[p.label(id)].push_back(id);
  double total = 0;
  for (const auto& [l, members] : clusters) {
    std::size_t best = 0;
    for (auto a : members) {
      std::size_t same = 0;
      for (auto b : members) same += g.label(a) == g.label(b);
      best = std::max(best, same);
    }
    total += double(best);
  }
  return total / double(u.size());
}

}  // namespace

TEST_CASE("identical clusterings score one everywhere") {
  auto c = make({0, 0, 1, 2, 2, 2});
  auto m = evaluate(c, c);
  for (double v : {m.macro_p, m.macro_r, m.macro_f1, m.micro_p, m.micro_r, m.micro_f1, m.pair_p,
                   m.pair_r, m.pair_f1, m.mean_f1})
    CHECK(v == 1.0);
}

TEST_CASE("one merged cluster against two gold clusters") {
  auto gold = make({0, 0, 1});
  auto pred = make({0, 0, 0});
  auto m = evaluate(pred, gold);
  CHECK(m.pair_p == doctest::Approx(1.0 / 3.0));
  CHECK(m.pair_r == 1.0);
  CHECK(m.pair_f1 == doctest::Approx(0.5));
  CHECK(m.macro_p == 0.0);
  CHECK(m.macro_r == 1.0);
  CHECK(m.micro_p == doctest::Approx(2.0 / 3.0));
  CHECK(m.micro_r == 1.0);
  CHECK(m.mean_f1 == doctest::Approx((0.0 + 0.8 + 0.5) / 3.0));
}

TEST_CASE("all-singleton prediction uses the empty-denominator convention") {
  auto gold = make({0, 0, 1, 2});
  auto pred = make({0, 1, 2, 3});
  auto m = evaluate(pred, gold);
  CHECK(m.pair_p == 1.0);
  CHECK(m.pair_r == 0.0);
  CHECK(m.pair_f1 == 0.0);
  CHECK(f1_score(0.0, 0.0) == 0.0);
}

TEST_CASE("universe restriction") {
  auto gold = make({0, 0, 1, 1});
  auto pred = make({0, 1, 1, 1});
  auto m = evaluate(pred, gold, {2, 3});
  CHECK(m.pair_f1 == 1.0);
  CHECK(m.macro_f1 == 1.0);
  CHECK_THROWS_AS(evaluate(pred, gold, {0, 7}), DimensionError);
  CHECK_THROWS_AS(evaluate(pred, make({0, 0})), DimensionError);
}

TEST_CASE("metrics agree with brute-force enumeration") {
  std::mt19937_64 rng(0);
  for (int t = 0; t < 100; ++t) {
    std::uniform_int_distribution<int> size(1, 200);
    const int n = size(rng);
    std::uniform_int_distribution<int> kp(1, n), kg(1, n);
    const int a = kp(rng), b = kg(rng);
    std::uniform_int_distribution<int> lp(0, a - 1), lg(0, b - 1);
    std::vector<std::int64_t> pl(static_cast<std::size_t>(n)), gl(pl.size());
    for (auto& x : pl) x = lp(rng);
    for (auto& x : gl) x = lg(rng);
    auto pred = make(pl), gold = make(gl);
    std::vector<MentionId> universe;
    std::bernoulli_distribution keep(0.8);
    for (MentionId i = 0; i < MentionId(n); ++i)
      if (t % 2 == 0 || keep(rng)) universe.push_back(i);
    if (universe.empty()) universe.push_back(0);

    auto m = evaluate(pred, gold, universe);
    auto c = brute_pairs(pred, gold, universe);
    CHECK(m.pair_p == (c.pred > 0 ? c.hits / c.pred : 1.0));
    CHECK(m.pair_r == (c.gold > 0 ? c.hits / c.gold : 1.0));
    CHECK(m.macro_p == doctest::Approx(brute_macro(pred, gold, universe)).epsilon(1e-15));
    CHECK(m.macro_r == doctest::Approx(brute_macro(gold, pred, universe)).epsilon(1e-15));
    CHECK(m.micro_p == doctest::Approx(brute_micro(pred, gold, universe)).epsilon(1e-15));
    CHECK(m.micro_r == doctest::Approx(brute_micro(gold, pred, universe)).epsilon(1e-15));

    auto swapped = evaluate(gold, pred, universe);
    CHECK(swapped.pair_p == m.pair_r);
    CHECK(swapped.macro_p == m.macro_r);

    // Relabelling on either side changes nothing.
    std::vector<std::int64_t> relabel = pl;
    for (auto& x : relabel) x = 1000 - 7 * x;
    auto r = evaluate(make(relabel), gold, universe);
    CHECK(r.pair_f1 == m.pair_f1);
    CHECK(r.macro_f1 == m.macro_f1);
    CHECK(r.micro_f1 == m.micro_f1);
  }
}

TEST_CASE("metric lines") {
  std::ostringstream out;
  write_metrics(out, evaluate(make({0, 0}), make({0, 0})), "entity_");
  CHECK(out.str().rfind("entity_macro_p=1.000000\n", 0) == 0);
  CHECK(out.str().find("entity_mean_f1=1.000000\n") != std::string::npos);
}
