#pragma once

// Weighted mention-equivalence constraints and the loss that pulls paired
// lookup rows together.

#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "okgc/diff_engine.hpp"
#include "okgc/kg_core.hpp"

namespace okgc {

struct SideInfoPair {
  MentionId a = 0;
  MentionId b = 0;
  double score = 0.0;
  std::string source;

  friend bool operator==(const SideInfoPair&, const SideInfoPair&) = default;
};

using SideInfoPairs = std::vector<SideInfoPair>;

// Orders each pair so a < b, drops self pairs, keeps the highest score per
// (a, b) and sorts by (a, b).
SideInfoPairs dedupe_pairs(SideInfoPairs pairs);
// Concatenates and dedupes.
SideInfoPairs merge_pairs(const std::vector<SideInfoPairs>& parts);

// Number of mentions whose token set contains each token.
using IdfStats = std::unordered_map<std::string, std::size_t>;
IdfStats token_frequencies(const Vocabulary& vocab);

// sum_{w in A and B} 1/log(1+f(w)) / sum_{w in A or B} 1/log(1+f(w)).
double idf_overlap_score(const std::vector<std::string>& a, const std::vector<std::string>& b,
                         const IdfStats& freq);

// Candidate pairs come from an inverted token index.
SideInfoPairs idf_overlap_pairs(const Vocabulary& vocab, double threshold);

// Lowercase, drop a terminal possessive 's per token, remove punctuation,
// singularise a terminal s on tokens of length >= 4, collapse whitespace.
std::string morph_normalize(std::string_view phrase);
SideInfoPairs morph_pairs(const Vocabulary& vocab);

// S_C(p, q) = e^{2 - (eta(p) + eta(q))} / |C|^2 with eta(x) the number of
// clusters containing x; every unordered pair inside every cluster.
SideInfoPairs score_imported_clusters(const std::vector<std::vector<MentionId>>& clusters,
                                      const std::string& source = "imported");

struct ImportedClusters {
  std::string source = "imported";
  std::vector<std::vector<MentionId>> clusters;
  std::size_t unknown_mentions = 0;  // surface forms absent from the vocabulary
};

// One cluster per line, tab-separated surface forms; an optional
// "# source: <name>" header names the source. Unknown forms are skipped.
ImportedClusters load_imported_clusters(const std::filesystem::path& path,
                                        const Vocabulary& vocab);

// `a \t b \t score \t source`, surface forms.
void write_pairs(const SideInfoPairs& pairs, const Vocabulary& vocab,
                 const std::filesystem::path& path);
SideInfoPairs load_pairs(const std::filesystem::path& path, const Vocabulary& vocab);

// sum score * ||lookup[a] - lookup[b]||^2 / D_in.
ad::Var side_info_loss(const SideInfoPairs& pairs, const ad::Var& lookup);

}  // namespace okgc
