#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "okgc/kg_core.hpp"
#include "okgc/phrase_embed.hpp"
#include "okgc/side_info.hpp"

namespace okgc {

struct ScoredPair {
  std::string a;
  std::string b;
  double soft_truth = 0.0;
};

// `a \t b \t soft_truth` per line.
std::vector<ScoredPair> load_scored_pairs(const std::filesystem::path& path);

struct GoldClusters {
  // Components of size >= 2; members sorted, clusters sorted by first member.
  std::vector<std::vector<std::string>> clusters;
  // Triples whose head or tail is a gold member (only when triples were given).
  std::optional<OpenKG> retained;
};

// Keeps pairs with soft_truth >= threshold and returns the connected
// components of the resulting undirected graph.
GoldClusters build_gold(const std::vector<ScoredPair>& pairs, double threshold = 0.25,
                        const OpenKG* triples = nullptr);

// One cluster per line, tab-separated surface forms.
void write_gold_clusters(const std::vector<std::vector<std::string>>& clusters,
                         const std::filesystem::path& path);

struct SynthConfig {
  std::size_t num_entities = 20;
  std::size_t surface_forms_per_entity = 3;
  std::size_t num_relations = 10;
  std::size_t paraphrases_per_relation = 2;
  std::size_t num_triples = 600;
  double token_noise_prob = 0.1;
  std::size_t word_dim = 32;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SynthDataset {
  OpenKG kg;
  Clustering gold_entities;
  Clustering gold_relations;
  SideInfoPairs oracle_entity_pairs;
  SideInfoPairs oracle_relation_pairs;
  WordVectors word_vectors;
  std::vector<std::string> tokens;  // word-vector file order
};

// Every latent entity gets a rare stem token; each of its surface forms is the
// stem followed by a distinct frequent suffix token, and may carry an extra
// noise token with probability token_noise_prob. Suffix and noise vectors
// share a common direction. Relations follow the same scheme. Triples repeat facts of a random latent graph (three facts per
// head entity) rendered with uniformly chosen forms. Every form appears at
// least once, so the triple count is at least the number of forms.
SynthDataset gen_synthetic(const SynthConfig& cfg);

// Seeded shuffle, then the first round(ratio * n) triples go to `first`.
struct TripleSplit {
  std::vector<Triple> first;
  std::vector<Triple> second;
};
TripleSplit split_triples(const std::vector<Triple>& triples, double ratio, std::uint64_t seed);

}  // namespace okgc
