#pragma once

// Couples the entity and relation VAEs through a triple-scoring loss.
//
// Each mention's cluster posterior (evaluated at the encoder mean) is sharpened
// by a soft argmax into a near one-hot selector v; the mention is represented
// by v times the live mixture means. Triples are scored with HolE,
// s = e_r . corr(e_h, e_t), under uniform head/tail corruption.

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "okgc/kg_core.hpp"
#include "okgc/vade.hpp"

namespace okgc {

struct SoftArgmaxConfig {
  double tau = 1e5;
  void validate() const;
};

struct NegSampleConfig {
  std::size_t num_negatives = 20;
  void validate() const;
};

enum class KgeLossKind { kBce, kMargin, kTransE };

KgeLossKind parse_kge_loss(std::string_view s);
std::string_view to_string(KgeLossKind k);

// exp(tau c_i) / sum_j exp(tau c_j), shift-stable.
Vector soft_argmax(const Vector& c, double tau);
ad::Var soft_argmax_rows(const ad::Var& c, double tau);

// HolE logit per row: sum_k e_r(i,k) corr(e_h, e_t)(i,k).
ad::Var hole_logits(const ad::Var& e_h, const ad::Var& e_r, const ad::Var& e_t);
// -||e_h + e_r - e_t||^2 per row.
ad::Var transe_logits(const ad::Var& e_h, const ad::Var& e_r, const ad::Var& e_t);

// soft_argmax(q(c | mu(x))) * means for every row of x.
ad::Var cluster_representation(const Vae& vae, const ad::ParamStore& store, const ad::Var& x,
                               const SoftArgmaxConfig& cfg);

// For each positive, `num_negatives` corruptions stored contiguously. A fair
// coin picks head or tail; the replacement is a uniform entity different
// from the original. Throws ConfigError when fewer than two entities exist.
std::vector<Triple> sample_negatives(const std::vector<Triple>& positives,
                                     std::size_t num_entities, const NegSampleConfig& cfg,
                                     std::mt19937_64& rng);

struct KgeInputs {
  const Vae* entity_vae = nullptr;
  const Vae* relation_vae = nullptr;
  const ad::ParamStore* store = nullptr;
  ad::Var entity_lookup;    // |E| x D_in
  ad::Var relation_lookup;  // |R| x D_in
};

// Logit of every triple (scores are sigmoid(logit)).
ad::Var triple_logits(const KgeInputs& in, const std::vector<Triple>& triples,
                      const SoftArgmaxConfig& cfg, KgeLossKind kind = KgeLossKind::kBce);

// Probabilities sigmoid(logit) without recording a graph.
Vector triple_scores(const KgeInputs& in, const std::vector<Triple>& triples,
                     const SoftArgmaxConfig& cfg, KgeLossKind kind = KgeLossKind::kBce);

// Mean over positives. bce/transe:
//   -log s(pos) - (1/N) sum_neg log(1 - s(neg))
// margin: (1/N) sum_neg max(0, 1 - l(pos) + l(neg)) on raw logits.
ad::Var kge_loss(const KgeInputs& in, const std::vector<Triple>& positives,
                 const std::vector<Triple>& negatives, const SoftArgmaxConfig& cfg,
                 KgeLossKind kind = KgeLossKind::kBce);

}  // namespace okgc
