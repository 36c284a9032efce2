#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "okgc/errors.hpp"
#include "okgc/phrase_embed.hpp"

using namespace okgc;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& body) {
  auto p = std::filesystem::temp_directory_path() / ("okgc_pe_" + name);
  std::ofstream(p, std::ios::binary) << body;
  return p;
}

WordVectors wv2(Vector cat, Vector dog) {
  WordVectors wv;
  wv.dim = 2;
  wv.table.emplace("cat", std::move(cat));
  wv.table.emplace("dog", std::move(dog));
  return wv;
}

Vector vec(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

Vector embed_one(const std::string& phrase, const WordVectors& wv, EmbedMode mode) {
  Vocabulary v;
  v.add(phrase);
  return embed_phrases(v, wv, mode).matrix.row(0).transpose();
}

}  // namespace

TEST_CASE("word-vector file parsing") {
  auto wv = load_word_vectors(write_temp("ok.txt", "cat 1 0\ndog 0 1\n"));
  CHECK(wv.dim == 2);
  CHECK(wv.table.size() == 2);
  CHECK(wv.table.at("dog")[1] == 1.0);
  CHECK_THROWS_AS(load_word_vectors(write_temp("dims.txt", "cat 1 0\ndog 0 1 2\n")), ParseError);
  CHECK_THROWS_AS(load_word_vectors(write_temp("nan.txt", "cat 1 x\n")), ParseError);
  CHECK_THROWS_AS(load_word_vectors(write_temp("lonely.txt", "cat\n")), ParseError);
  CHECK_THROWS_AS(load_word_vectors("/nonexistent/okgc.vec"), IoError);
}

TEST_CASE("word vectors round-trip exactly") {
  WordVectors wv = wv2(vec(0.1, -1.0 / 3.0), vec(1e-300, 12345.678901234567));
  auto p = std::filesystem::temp_directory_path() / "okgc_pe_rt.txt";
  write_word_vectors(wv, {"dog", "cat"}, p);
  auto back = load_word_vectors(p);
  CHECK(back.dim == 2);
  for (const char* t : {"cat", "dog"}) CHECK(back.table.at(t) == wv.table.at(t));
}

TEST_CASE("phrase averaging rules") {
  auto basis = wv2(vec(1, 0), vec(0, 1));
  CHECK(embed_one("cat dog", basis, EmbedMode::kUnnormalized) == vec(0.5, 0.5));
  CHECK(embed_one("cat cat", basis, EmbedMode::kUnnormalized) == vec(1, 0));
  CHECK(embed_one("cat cat", basis, EmbedMode::kNormalized) == vec(1, 0));

  auto scaled = wv2(vec(2, 0), vec(0, 1));
  CHECK(embed_one("cat dog", scaled, EmbedMode::kNormalized) == vec(0.5, 0.5));
  CHECK(embed_one("cat dog", scaled, EmbedMode::kUnnormalized) == vec(1, 0.5));

  // OOV tokens count in the denominator; case is folded.
  CHECK(embed_one("Cat  unicorn", basis, EmbedMode::kUnnormalized) == vec(0.5, 0));
  CHECK(embed_one("unicorn", basis, EmbedMode::kNormalized) == vec(0, 0));
}

TEST_CASE("empty vocabulary gives an empty matrix") {
  auto pe = embed_phrases(Vocabulary{}, wv2(vec(1, 0), vec(0, 1)), EmbedMode::kNormalized);
  CHECK(pe.matrix.rows() == 0);
  CHECK(pe.matrix.cols() == 2);
}

TEST_CASE("tokenisation lowercases and splits on whitespace") {
  CHECK(phrase_tokens("  New\tYork CITY ") == std::vector<std::string>{"new", "york", "city"});
  CHECK(phrase_tokens("").empty());
  CHECK(parse_embed_mode("unnormalized") == EmbedMode::kUnnormalized);
  CHECK(to_string(EmbedMode::kNormalized) == "normalized");
  CHECK_THROWS_AS(parse_embed_mode("l2"), ConfigError);
}

TEST_CASE("lookup initialisation") {
  auto a = init_lookup(5, 768, 42);
  auto b = init_lookup(5, 768, 42);
  CHECK(a.matrix.rows() == 5);
  CHECK(a.matrix.cols() == 768);
  CHECK(std::memcmp(a.matrix.data(), b.matrix.data(), sizeof(double) * 5 * 768) == 0);
  CHECK_FALSE(init_lookup(5, 768, 43).matrix == a.matrix);
  CHECK(init_lookup(0, 8, 1).matrix.rows() == 0);
  CHECK_THROWS_AS(init_lookup(3, 0, 1), ContractError);

  // Uniform on [-b, b]: mean 0 and variance b^2 / 3.
  const std::size_t n = 100000;
  const double bound = std::sqrt(6.0 / 10.0);
  auto big = init_lookup(n / 10, 10, 7).matrix;
  CHECK(big.cwiseAbs().maxCoeff() <= bound);
  const double sigma = bound / std::sqrt(3.0);
  CHECK(std::abs(big.mean()) < 3.0 * sigma / std::sqrt(static_cast<double>(n)));
  const double var = (big.array() - big.mean()).square().mean();
  CHECK(var == doctest::Approx(sigma * sigma).epsilon(0.02));
}
