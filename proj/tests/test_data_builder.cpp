#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "okgc/data_builder.hpp"
#include "okgc/errors.hpp"

using namespace okgc;

namespace {

// Path-compressing union-find, used as the oracle for build_gold.
struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

using ClusterSet = std::set<std::set<std::string>>;

ClusterSet as_set(const std::vector<std::vector<std::string>>& c) {
  ClusterSet out;
  for (const auto& g : c) out.emplace(g.begin(), g.end());
  return out;
}

ClusterSet union_find_gold(const std::vector<ScoredPair>& pairs, double threshold) {
  std::map<std::string, std::size_t> id;
  std::vector<std::string> names;
  for (const auto& p : pairs)
    if (p.soft_truth >= threshold)
      for (const auto* s : {&p.a, &p.b})
        if (id.emplace(*s, names.size()).second) names.push_back(*s);
  UnionFind uf(names.size());
  for (const auto& p : pairs)
    if (p.soft_truth >= threshold) uf.unite(id[p.a], id[p.b]);
  std::map<std::size_t, std::set<std::string>> groups;
  for (std::size_t i = 0; i < names.size(); ++i) groups[uf.find(i)].insert(names[i]);
  ClusterSet out;
  for (auto& [root, g] : groups)
    if (g.size() >= 2) out.insert(g);
  return out;
}

}  // namespace

TEST_CASE("gold clusters from thresholded pairs") {
  auto g = build_gold({{"a", "b", 0.3}, {"b", "c", 0.2}, {"d", "e", 0.9}}, 0.25);
  CHECK(g.clusters == std::vector<std::vector<std::string>>{{"a", "b"}, {"d", "e"}});
  CHECK(!g.retained);
  CHECK(build_gold({{"a", "b", 0.1}}, 0.25).clusters.empty());
  auto chain = build_gold({{"a", "b", 0.5}, {"b", "c", 0.5}});
  CHECK(chain.clusters == std::vector<std::vector<std::string>>{{"a", "b", "c"}});
  // Exactly at the threshold is kept.
  CHECK(build_gold({{"x", "y", 0.25}}).clusters.size() == 1);
  CHECK_THROWS_AS(build_gold({}, 1.5), ConfigError);
}

TEST_CASE("gold clusters retain only triples touching a gold member") {
  OpenKG kg;
  auto add = [&](const char* h, const char* r, const char* t) {
    kg.triples.push_back({kg.entities.add(h), kg.relations.add(r), kg.entities.add(t)});
  };
  add("a", "r1", "z");
  add("q", "r2", "b");
  add("q", "r3", "z");
  auto g = build_gold({{"a", "b", 0.9}, {"q", "z", 0.1}}, 0.25, &kg);
  REQUIRE(g.retained);
  CHECK(g.retained->triples.size() == 2);
  CHECK(g.retained->relations.size() == 2);
  CHECK(build_gold({{"a", "b", 0.1}}, 0.25, &kg).retained->triples.empty());
}

TEST_CASE("gold clusters match a union-find oracle") {
  std::mt19937_64 rng(0);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = t < 95 ? 2 + t * 3 : 10000;
    const std::size_t m = t < 95 ? n : 8000;
    std::uniform_int_distribution<std::size_t> node(0, n - 1);
    std::uniform_real_distribution<double> score(0.0, 1.0);
    std::vector<ScoredPair> pairs;
    for (std::size_t k = 0; k < m; ++k) {
      auto a = node(rng), b = node(rng);
      if (a == b) continue;
      pairs.push_back({"m" + std::to_string(a), "m" + std::to_string(b), score(rng)});
    }
    const double threshold = 0.25 + 0.05 * (t % 5);
    auto got = build_gold(pairs, threshold);
    CHECK(as_set(got.clusters) == union_find_gold(pairs, threshold));
    CHECK(std::is_sorted(got.clusters.begin(), got.clusters.end()));
  }
}

TEST_CASE("scored pair and gold files") {
  auto dir = std::filesystem::temp_directory_path();
  auto path = dir / "okgc_db_pairs.tsv";
  {
    std::ofstream out(path);
    out << "a\tb\t0.3\n\nd\te\t0.9\n";
  }
  auto pairs = load_scored_pairs(path);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[1].soft_truth == 0.9);
  {
    std::ofstream out(path);
    out << "a\tb\tx\n";
  }
  CHECK_THROWS_AS(load_scored_pairs(path), ParseError);

  auto gpath = dir / "okgc_db_gold.txt";
  write_gold_clusters({{"a", "b"}, {"c", "d", "e"}}, gpath);
  CHECK(read_lines(gpath) == std::vector<std::string>{"a\tb", "c\td\te"});
  std::filesystem::remove(path);
  std::filesystem::remove(gpath);
}

TEST_CASE("synthetic dataset construction contract") {
  SynthConfig cfg;
  auto ds = gen_synthetic(cfg);
  CHECK(ds.kg.entities.size() == 60);
  CHECK(ds.kg.relations.size() == 20);
  CHECK(ds.kg.triples.size() == 600);
  CHECK(ds.gold_entities.size() == 60);
  CHECK(ds.gold_entities.num_clusters() == 20);
  for (const auto& g : ds.gold_entities.groups()) CHECK(g.size() == 3);
  CHECK(ds.gold_relations.num_clusters() == 10);
  for (const auto& g : ds.gold_relations.groups()) CHECK(g.size() == 2);
  CHECK(ds.oracle_entity_pairs.size() == 60);
  CHECK(ds.oracle_relation_pairs.size() == 10);
  for (const auto& p : ds.oracle_entity_pairs) {
    CHECK(ds.gold_entities.label(p.a) == ds.gold_entities.label(p.b));
    CHECK(p.score == 1.0);
  }
  // Every token of every form has a vector of the configured width.
  for (const auto* vocab : {&ds.kg.entities, &ds.kg.relations})
    for (const auto& form : vocab->forms())
      for (const auto& tok : phrase_tokens(form)) {
        REQUIRE(ds.word_vectors.table.count(tok) == 1);
        CHECK(ds.word_vectors.table.at(tok).size() == 32);
      }
  for (const auto& t : ds.kg.triples) CHECK(ds.gold_entities.label(t.head) != ds.gold_entities.label(t.tail));
}

TEST_CASE("synthetic dataset is deterministic per seed") {
  SynthConfig cfg;
  cfg.seed = 7;
  auto a = gen_synthetic(cfg), b = gen_synthetic(cfg);
  CHECK(a.kg.triples == b.kg.triples);
  CHECK(a.kg.entities.forms() == b.kg.entities.forms());
  CHECK(a.tokens == b.tokens);
  for (const auto& t : a.tokens) CHECK(a.word_vectors.table.at(t) == b.word_vectors.table.at(t));
  cfg.seed = 8;
  CHECK(gen_synthetic(cfg).kg.entities.forms() != a.kg.entities.forms());
}

TEST_CASE("noise-free synthetic forms are recoverable by IDF overlap") {
  SynthConfig cfg;
  cfg.token_noise_prob = 0.0;
  auto ds = gen_synthetic(cfg);
  auto pairs = idf_overlap_pairs(ds.kg.entities, 0.4);
  std::set<std::pair<MentionId, MentionId>> found;
  for (const auto& p : pairs) found.emplace(p.a, p.b);
  std::size_t hit = 0;
  for (const auto& p : ds.oracle_entity_pairs) hit += found.count({p.a, p.b});
  CHECK(double(hit) >= 0.9 * double(ds.oracle_entity_pairs.size()));
}

TEST_CASE("synthetic config validation") {
  SynthConfig cfg;
  cfg.token_noise_prob = 1.5;
  CHECK_THROWS_AS(gen_synthetic(cfg), ConfigError);
  cfg = {};
  cfg.num_entities = 1;
  CHECK_THROWS_AS(gen_synthetic(cfg), ConfigError);
}

TEST_CASE("triple split") {
  std::vector<Triple> triples;
  for (MentionId i = 0; i < 10; ++i) triples.push_back({i, 0, i});
  auto s = split_triples(triples, 0.8, 3);
  CHECK(s.first.size() == 8);
  CHECK(s.second.size() == 2);
  auto again = split_triples(triples, 0.8, 3);
  CHECK(s.first == again.first);
  std::set<MentionId> heads;
  for (const auto* part : {&s.first, &s.second})
    for (const auto& t : *part) heads.insert(t.head);
  CHECK(heads.size() == 10);
  CHECK_THROWS_AS(split_triples(triples, -0.1, 0), ConfigError);
}
