#include "okgc/kge.hpp"

#include <map>

#include "okgc/errors.hpp"

namespace okgc {

void SoftArgmaxConfig::validate() const {
  if (!(tau > 0.0)) throw ConfigError("soft-argmax temperature must be positive");
}

void NegSampleConfig::validate() const {
  if (num_negatives == 0) throw ConfigError("num_negatives must be >= 1");
}

KgeLossKind parse_kge_loss(std::string_view s) {
  if (s == "bce") return KgeLossKind::kBce;
  if (s == "margin") return KgeLossKind::kMargin;
  if (s == "transe") return KgeLossKind::kTransE;
  throw ConfigError("unknown KGE loss '" + std::string(s) + "' (expected bce|margin|transe)");
}

std::string_view to_string(KgeLossKind k) {
  switch (k) {
    case KgeLossKind::kBce: return "bce";
    case KgeLossKind::kMargin: return "margin";
    case KgeLossKind::kTransE: return "transe";
  }
  return "?";
}

Vector soft_argmax(const Vector& c, double tau) {
  ad::NoGradGuard guard;
  Matrix row = c.transpose();
  return soft_argmax_rows(ad::constant(std::move(row)), tau).value().row(0).transpose();
}

ad::Var soft_argmax_rows(const ad::Var& c, double tau) {
  return ad::softmax_rows(ad::scale(c, tau));
}

ad::Var hole_logits(const ad::Var& e_h, const ad::Var& e_r, const ad::Var& e_t) {
  return ad::row_sum(ad::mul(e_r, ad::circular_correlation_rows(e_h, e_t)));
}

ad::Var transe_logits(const ad::Var& e_h, const ad::Var& e_r, const ad::Var& e_t) {
  return ad::scale(ad::row_sum(ad::square(ad::sub(ad::add(e_h, e_r), e_t))), -1.0);
}

ad::Var cluster_representation(const Vae& vae, const ad::ParamStore& store, const ad::Var& x,
                               const SoftArgmaxConfig& cfg) {
  auto q = vae.encode(store, x);
  auto gamma = ad::exp(
      log_cluster_posterior(q.mu, vae.log_pi(store), vae.means(store), vae.log_vars(store)));
  return ad::matmul(soft_argmax_rows(gamma, cfg.tau), vae.means(store));
}

std::vector<Triple> sample_negatives(const std::vector<Triple>& positives,
                                     std::size_t num_entities, const NegSampleConfig& cfg,
                                     std::mt19937_64& rng) {
  cfg.validate();
  if (num_entities < 2) throw ConfigError("negative sampling needs at least two entities");
  std::uniform_int_distribution<MentionId> pick(0, static_cast<MentionId>(num_entities - 1));
  std::bernoulli_distribution coin(0.5);
  std::vector<Triple> out;
  out.reserve(positives.size() * cfg.num_negatives);
  for (const auto& p : positives) {
    for (std::size_t k = 0; k < cfg.num_negatives; ++k) {
      Triple n = p;
      MentionId& slot = coin(rng) ? n.head : n.tail;
      const MentionId original = slot;
      do slot = pick(rng);
      while (slot == original);
      out.push_back(n);
    }
  }
  return out;
}

namespace {

// Encodes each distinct id once and returns a row per occurrence.
ad::Var representations(const Vae& vae, const ad::ParamStore& store, const ad::Var& lookup,
                        const std::vector<MentionId>& ids, const SoftArgmaxConfig& cfg) {
  std::map<MentionId, Eigen::Index> slot;
  for (auto id : ids) slot.emplace(id, 0);
  std::vector<Eigen::Index> unique;
  unique.reserve(slot.size());
  for (auto& [id, s] : slot) {
    if (id >= static_cast<MentionId>(lookup.rows()))
      throw ContractError("mention id " + std::to_string(id) + " outside lookup table");
    s = static_cast<Eigen::Index>(unique.size());
    unique.push_back(static_cast<Eigen::Index>(id));
  }
  auto reps = cluster_representation(vae, store, ad::gather_rows(lookup, unique), cfg);
  std::vector<Eigen::Index> rows;
  rows.reserve(ids.size());
  for (auto id : ids) rows.push_back(slot.at(id));
  return ad::gather_rows(reps, rows);
}

}  // namespace

ad::Var triple_logits(const KgeInputs& in, const std::vector<Triple>& triples,
                      const SoftArgmaxConfig& cfg, KgeLossKind kind) {
  cfg.validate();
  if (triples.empty()) throw ContractError("triple_logits: empty triple list");
  std::vector<MentionId> ents, rels;
  ents.reserve(2 * triples.size());
  rels.reserve(triples.size());
  for (const auto& t : triples) ents.push_back(t.head);
  for (const auto& t : triples) ents.push_back(t.tail);
  for (const auto& t : triples) rels.push_back(t.rel);

  const auto n = static_cast<Eigen::Index>(triples.size());
  auto e = representations(*in.entity_vae, *in.store, in.entity_lookup, ents, cfg);
  std::vector<Eigen::Index> head_rows(static_cast<std::size_t>(n)), tail_rows(head_rows.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    head_rows[static_cast<std::size_t>(i)] = i;
    tail_rows[static_cast<std::size_t>(i)] = n + i;
  }
  auto e_h = ad::gather_rows(e, head_rows);
  auto e_t = ad::gather_rows(e, tail_rows);
  auto e_r = representations(*in.relation_vae, *in.store, in.relation_lookup, rels, cfg);
  return kind == KgeLossKind::kTransE ? transe_logits(e_h, e_r, e_t) : hole_logits(e_h, e_r, e_t);
}

Vector triple_scores(const KgeInputs& in, const std::vector<Triple>& triples,
                     const SoftArgmaxConfig& cfg, KgeLossKind kind) {
  ad::NoGradGuard guard;
  return ad::sigmoid(triple_logits(in, triples, cfg, kind)).value().col(0);
}

ad::Var kge_loss(const KgeInputs& in, const std::vector<Triple>& positives,
                 const std::vector<Triple>& negatives, const SoftArgmaxConfig& cfg,
                 KgeLossKind kind) {
  if (positives.empty()) throw ContractError("kge_loss: empty batch");
  if (negatives.empty() || negatives.size() % positives.size() != 0)
    throw DimensionError("kge_loss: negatives must be a positive multiple of positives");
  const std::size_t per = negatives.size() / positives.size();
  const double p = static_cast<double>(positives.size());

  std::vector<Triple> all = positives;
  all.insert(all.end(), negatives.begin(), negatives.end());
  auto logits = triple_logits(in, all, cfg, kind);

  std::vector<Eigen::Index> pos_rows(positives.size()), neg_rows(negatives.size()),
      owner_rows(negatives.size());
  for (std::size_t i = 0; i < positives.size(); ++i) pos_rows[i] = static_cast<Eigen::Index>(i);
  for (std::size_t j = 0; j < negatives.size(); ++j) {
    neg_rows[j] = static_cast<Eigen::Index>(positives.size() + j);
    owner_rows[j] = static_cast<Eigen::Index>(j / per);
  }
  auto pos = ad::gather_rows(logits, pos_rows);
  auto neg = ad::gather_rows(logits, neg_rows);

  if (kind == KgeLossKind::kMargin) {
    auto hinge = ad::relu(ad::add_scalar(ad::sub(neg, ad::gather_rows(pos, owner_rows)), 1.0));
    return ad::scale(ad::sum(hinge), 1.0 / (p * static_cast<double>(per)));
  }
  // log(1 - sigmoid(l)) = log_sigmoid(-l)
  auto pos_term = ad::scale(ad::sum(ad::log_sigmoid(pos)), -1.0 / p);
  auto neg_term =
      ad::scale(ad::sum(ad::log_sigmoid(ad::scale(neg, -1.0))), -1.0 / (p * static_cast<double>(per)));
  return ad::add(pos_term, neg_term);
}

}  // namespace okgc
