#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "okgc/cli.hpp"
#include "okgc/kg_core.hpp"

namespace fs = std::filesystem;
using namespace okgc;

namespace {

struct Run {
  int rc;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int rc = run_cli(args, out, err);
  return {rc, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  auto d = fs::temp_directory_path() / ("okgc_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write(const fs::path& p, const std::string& body) { std::ofstream(p, std::ios::binary) << body; }

// Small synthetic set shared by the tests below.
fs::path synth() {
  static const fs::path dir = [] {
    auto d = fresh_dir("synth");
    REQUIRE(cli({"gen-synth", "--out-dir", d.string(), "--num-entities", "6",
                 "--num-relations", "3", "--num-triples", "60", "--seed", "4"})
                .rc == kExitOk);
    return d;
  }();
  return dir;
}

std::vector<std::string> tiny_train(const fs::path& out) {
  const auto d = synth();
  return {"train",          "--triples",      (d / "triples.tsv").string(),
          "--wordvecs",     (d / "wordvecs.txt").string(),
          "--out-dir",      out.string(),
          "--input-dim",    "8",
          "--hidden",       "8",
          "--latent-dim",   "4",
          "--epochs-step1", "2",
          "--epochs-step2", "2",
          "--num-negatives", "2"};
}

}  // namespace

TEST_CASE("exit codes") {
  CHECK(cli({}).rc == kExitUsage);
  CHECK(cli({"frobnicate"}).rc == kExitUsage);
  CHECK(cli({"eval", "--pred", "x"}).rc == kExitUsage);
  CHECK(cli({"--version"}).rc == kExitOk);
  CHECK(cli({"--help"}).rc == kExitOk);

  auto missing = cli({"ingest", "--triples", "/nonexistent/okgc/t.tsv", "--out-dir",
                      fresh_dir("missing").string()});
  CHECK(missing.rc == kExitFailure);
  CHECK(missing.err.find("/nonexistent/okgc/t.tsv") != std::string::npos);

  auto bad = fresh_dir("bad");
  write(bad / "t.tsv", "a\tb\n");
  auto malformed = cli({"ingest", "--triples", (bad / "t.tsv").string(), "--out-dir", bad.string()});
  CHECK(malformed.rc == kExitFailure);
  CHECK(malformed.err.find(":1:") != std::string::npos);
}

TEST_CASE("bad configuration values are usage errors") {
  const auto out = fresh_dir("badcfg");
  auto args = tiny_train(out);
  args.insert(args.end(), {"--lr-step1", "-1"});
  CHECK(cli(args).rc == kExitUsage);
  CHECK(cli({"train", "--triples", "t", "--wordvecs", "w", "--set", "model.nonsense=1"}).rc ==
        kExitUsage);
  CHECK(cli({"train", "--triples", "t", "--wordvecs", "w", "--ablation", "no-such"}).rc ==
        kExitUsage);
}

TEST_CASE("help lists defaults") {
  auto r = cli({"train", "--help"});
  CHECK(r.rc == kExitOk);
  CHECK(r.out.find("--theta-e") != std::string::npos);
  CHECK(r.out.find("(default 0.4)") != std::string::npos);
  CHECK(r.out.find("(default 300)") != std::string::npos);
}

TEST_CASE("ingest writes vocabularies") {
  const auto d = fresh_dir("ingest");
  write(d / "t.tsv", "NBC-TV\thas headquarters in\tNYC\nNBC Television\tis in\tNew York City\n");
  REQUIRE(cli({"ingest", "--triples", (d / "t.tsv").string(), "--out-dir", d.string()}).rc ==
          kExitOk);
  CHECK(read_lines(d / "entities.txt").size() == 4);
  CHECK(read_lines(d / "relations.txt").size() == 2);
  CHECK(load_triples(d / "triples.tsv").triples.size() == 2);
  CHECK(fs::exists(d / "run_manifest.json"));
}

TEST_CASE("eval of a clustering against itself is perfect") {
  const auto d = synth();
  auto r = cli({"eval", "--pred", (d / "gold_entities.txt").string(), "--gold",
                (d / "gold_entities.txt").string(), "--triples", (d / "triples.tsv").string(),
                "--kv"});
  REQUIRE(r.rc == kExitOk);
  for (const char* k : {"macro_f1=1.000000", "micro_f1=1.000000", "pair_f1=1.000000"})
    CHECK(r.out.find(k) != std::string::npos);
}

TEST_CASE("build-gold keeps components above the threshold") {
  const auto d = fresh_dir("gold");
  write(d / "pairs.tsv", "a\tb\t0.9\nb\tc\t0.3\nd\te\t0.1\nf\tg\t0.25\n");
  REQUIRE(cli({"build-gold", "--pairs", (d / "pairs.tsv").string(), "--out",
               (d / "gold.txt").string()})
              .rc == kExitOk);
  CHECK(read_lines(d / "gold.txt") == std::vector<std::string>{"a\tb\tc", "f\tg"});
}

TEST_CASE("split partitions the triples") {
  const auto d = synth();
  const auto out = fresh_dir("split");
  REQUIRE(cli({"split", "--triples", (d / "triples.tsv").string(), "--ratio", "0.75",
               "--seed", "1", "--out-dir", out.string()})
              .rc == kExitOk);
  const auto all = load_triples(d / "triples.tsv").triples.size();
  const auto first = read_lines(out / "first.tsv").size();
  const auto second = read_lines(out / "second.tsv").size();
  CHECK(first + second == all);
  CHECK(first == static_cast<std::size_t>(std::llround(0.75 * static_cast<double>(all))));
}

TEST_CASE("train is reproducible and writes cluster files") {
  const auto a = fresh_dir("train_a"), b = fresh_dir("train_b");
  auto args_a = tiny_train(a), args_b = tiny_train(b);
  args_a.insert(args_a.end(), {"--ablation", "no-kge"});
  args_b.insert(args_b.end(), {"--ablation", "no-kge"});
  auto ra = cli(args_a);
  INFO(ra.err);
  REQUIRE(ra.rc == kExitOk);
  REQUIRE(cli(args_b).rc == kExitOk);
  for (const char* f : {"entity_clusters.txt", "relation_clusters.txt"}) {
    CHECK(!slurp(a / f).empty());
    CHECK(slurp(a / f) == slurp(b / f));
  }
  CHECK(fs::exists(a / "model.ckpt"));

  // The checkpoint reproduces the clustering.
  const auto c = fresh_dir("cluster");
  REQUIRE(cli({"cluster", "--checkpoint", (a / "model.ckpt").string(), "--triples",
               (synth() / "triples.tsv").string(), "--out-dir", c.string()})
              .rc == kExitOk);
  CHECK(slurp(c / "entity_clusters.txt") == slurp(a / "entity_clusters.txt"));
}
