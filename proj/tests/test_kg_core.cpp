#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "okgc/errors.hpp"
#include "okgc/kg_core.hpp"

using namespace okgc;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& body) {
  auto p = std::filesystem::temp_directory_path() / ("okgc_kg_" + name);
  std::ofstream(p, std::ios::binary) << body;
  return p;
}

OpenKG nbc_kg() {
  return load_triples(write_temp("nbc.tsv",
                                 "NBC-TV\thas headquarters in\tNYC\n"
                                 "NBC Television\tis in\tNew York City\n"));
}

}  // namespace

TEST_CASE("loading the two-line example") {
  auto kg = nbc_kg();
  CHECK(kg.entities.size() == 4);
  CHECK(kg.relations.size() == 2);
  CHECK(kg.triples.size() == 2);
  CHECK(kg.entities.surface(0) == "NBC-TV");
  CHECK(kg.entities.surface(1) == "NYC");
  CHECK(kg.triples[1] == Triple{2, 1, 3});
  CHECK(kg.head_mentions() == std::vector<MentionId>{0, 2});
  CHECK(kg.all_entity_mentions() == std::vector<MentionId>{0, 1, 2, 3});
}

TEST_CASE("self-loop and blank lines") {
  auto kg = load_triples(write_temp("loop.tsv", "a\tr\ta\n\n"));
  CHECK(kg.entities.size() == 1);
  CHECK(kg.relations.size() == 1);
  CHECK(kg.triples.size() == 1);
  CHECK(kg.triples[0] == Triple{0, 0, 0});
}

TEST_CASE("malformed triples name the line") {
  try {
    load_triples(write_temp("bad.tsv", "a\tr\tb\na\tr\n"));
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(load_triples(write_temp("emptyfield.tsv", "a\t\tb\n")), ParseError);
  CHECK_THROWS_AS(load_triples(write_temp("empty.tsv", "")), ParseError);
  CHECK_THROWS_AS(load_triples("/nonexistent/okgc.tsv"), IoError);
}

TEST_CASE("vocabulary is a bijection") {
  Vocabulary v;
  for (const char* s : {"x", "y", "x", "z", "y"}) v.add(s);
  REQUIRE(v.size() == 3);
  for (MentionId i = 0; i < v.size(); ++i) CHECK(*v.find(v.surface(i)) == i);
  CHECK_FALSE(v.find("w").has_value());
}

TEST_CASE("triples round-trip through the TSV writer") {
  auto kg = nbc_kg();
  auto p = std::filesystem::temp_directory_path() / "okgc_kg_rt.tsv";
  write_triples(kg, p);
  auto back = load_triples(p);
  CHECK(back.triples == kg.triples);
  CHECK(back.entities.forms() == kg.entities.forms());
  CHECK(back.relations.forms() == kg.relations.forms());
}

TEST_CASE("cluster files") {
  auto kg = nbc_kg();
  SUBCASE("two lines over four mentions") {
    auto c = parse_clusters({"NYC\tNew York City", "NBC-TV\tNBC Television"}, kg.entities,
                            Namespace::kEntity);
    CHECK(c.num_clusters() == 2);
    CHECK(c.labels() == std::vector<std::uint32_t>{0, 1, 0, 1});
  }
  SUBCASE("empty file gives singletons") {
    Vocabulary v;
    for (const char* s : {"a", "b", "c"}) v.add(s);
    auto c = parse_clusters({}, v, Namespace::kEntity);
    CHECK(c.num_clusters() == 3);
  }
  SUBCASE("unlisted mentions become singletons") {
    auto c = parse_clusters({"NYC\tNew York City"}, kg.entities, Namespace::kEntity);
    CHECK(c.labels() == std::vector<std::uint32_t>{0, 1, 2, 1});
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(parse_clusters({"NYC\tNYC"}, kg.entities, Namespace::kEntity), ParseError);
    CHECK_THROWS_AS(parse_clusters({"NYC", "NYC"}, kg.entities, Namespace::kEntity), ParseError);
    CHECK_THROWS_AS(parse_clusters({"Boston"}, kg.entities, Namespace::kEntity), ParseError);
  }
}

TEST_CASE("cluster writer layout") {
  Vocabulary v;
  for (const char* s : {"a", "b", "c"}) v.add(s);
  auto p = std::filesystem::temp_directory_path() / "okgc_kg_clusters.txt";
  write_clusters(Clustering({1, 1, 0}, Namespace::kEntity), v, p);
  CHECK(read_lines(p) == std::vector<std::string>{"a\tb", "c"});
  write_clusters(Clustering::singletons(3, Namespace::kEntity), v, p);
  CHECK(read_lines(p).size() == 3);
  CHECK_THROWS_AS(write_clusters(Clustering::singletons(2, Namespace::kEntity), v, p),
                  DimensionError);
  CHECK_THROWS_AS(write_clusters(Clustering::singletons(3, Namespace::kEntity), v,
                                 "/nonexistent/dir/c.txt"),
                  IoError);
}

TEST_CASE("random clusterings round-trip through the cluster files") {
  std::mt19937_64 rng(11);
  Vocabulary v;
  for (int i = 0; i < 60; ++i) v.add("m" + std::to_string(i));
  auto p = std::filesystem::temp_directory_path() / "okgc_kg_rand.txt";
  for (int trial = 0; trial < 50; ++trial) {
    std::uniform_int_distribution<int> lab(0, 1 + trial % 20);
    std::vector<std::int64_t> raw(v.size());
    for (auto& r : raw) r = lab(rng);
    auto c = Clustering::from_labels(raw, Namespace::kRelation);
    write_clusters(c, v, p);
    auto back = load_clusters(p, v, Namespace::kRelation);
    CHECK(back.same_partition(c));
    CHECK(back == c.canonical());
  }
}

TEST_CASE("clustering construction") {
  auto c = Clustering::from_labels({7, -3, 7, 12}, Namespace::kEntity);
  CHECK(c.labels() == std::vector<std::uint32_t>{0, 1, 0, 2});
  CHECK(c.num_clusters() == 3);
  CHECK(c.groups() == std::vector<std::vector<MentionId>>{{0, 2}, {1}, {3}});
  CHECK_THROWS_AS(Clustering({0, 2}, Namespace::kEntity), ContractError);
  Clustering d({1, 0, 1, 2}, Namespace::kEntity);
  CHECK(d.same_partition(c));
  CHECK_FALSE(d == c);
  CHECK(d.canonical() == c);
  CHECK_FALSE(Clustering::singletons(4, Namespace::kEntity).same_partition(c));
}
