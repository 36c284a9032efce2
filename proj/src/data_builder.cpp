#include "okgc/data_builder.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include "okgc/errors.hpp"

namespace okgc {

std::vector<ScoredPair> load_scored_pairs(const std::filesystem::path& path) {
  std::vector<ScoredPair> out;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto f = split_tabs(lines[i]);
    if (f.size() != 3) throw ParseError(path.string(), i + 1, "expected a<TAB>b<TAB>soft_truth");
    if (f[0].empty() || f[1].empty()) throw ParseError(path.string(), i + 1, "empty mention");
    double s = 0.0;
    auto res = std::from_chars(f[2].data(), f[2].data() + f[2].size(), s);
    if (res.ec != std::errc() || res.ptr != f[2].data() + f[2].size() || !(s >= 0.0 && s <= 1.0))
      throw ParseError(path.string(), i + 1, "soft_truth must be a number in [0, 1]");
    if (f[0] == f[1]) throw ParseError(path.string(), i + 1, "pair of identical mentions");
    out.push_back({f[0], f[1], s});
  }
  return out;
}

GoldClusters build_gold(const std::vector<ScoredPair>& pairs, double threshold,
                        const OpenKG* triples) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw ConfigError("threshold must lie in [0, 1]");
  std::map<std::string, std::size_t> node;
  std::vector<const std::string*> names;
  std::vector<std::vector<std::size_t>> adj;
  auto id_of = [&](const std::string& s) {
    auto [it, inserted] = node.try_emplace(s, names.size());
    if (inserted) {
      names.push_back(&it->first);
      adj.emplace_back();
    }
    return it->second;
  };
  for (const auto& p : pairs) {
    if (p.soft_truth < threshold) continue;
    const auto a = id_of(p.a), b = id_of(p.b);
    adj[a].push_back(b);
    adj[b].push_back(a);
  }

  GoldClusters out;
  std::vector<char> seen(names.size(), 0);
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < names.size(); ++start) {
    if (seen[start]) continue;
    std::vector<std::string> comp;
    stack.push_back(start);
    seen[start] = 1;
    while (!stack.empty()) {
      const auto v = stack.back();
      stack.pop_back();
      comp.push_back(*names[v]);
      for (auto w : adj[v])
        if (!seen[w]) {
          seen[w] = 1;
          stack.push_back(w);
        }
    }
    if (comp.size() < 2) continue;
    std::sort(comp.begin(), comp.end());
    out.clusters.push_back(std::move(comp));
  }
  std::sort(out.clusters.begin(), out.clusters.end());

  if (triples) {
    OpenKG kept;
    for (const auto& t : triples->triples) {
      const auto& h = triples->entities.surface(t.head);
      const auto& tl = triples->entities.surface(t.tail);
      if (!node.count(h) && !node.count(tl)) continue;
      kept.triples.push_back({kept.entities.add(h), kept.relations.add(triples->relations.surface(t.rel)),
                              kept.entities.add(tl)});
    }
    out.retained = std::move(kept);
  }
  return out;
}

void write_gold_clusters(const std::vector<std::vector<std::string>>& clusters,
                         const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& c : clusters) {
    for (std::size_t i = 0; i < c.size(); ++i) out << (i ? "\t" : "") << c[i];
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

void SynthConfig::validate() const {
  if (num_entities < 2 || surface_forms_per_entity < 1 || num_relations < 1 ||
      paraphrases_per_relation < 1 || num_triples < 1 || word_dim < 1)
    throw ConfigError("synthetic dataset: counts must be >= 1 (and >= 2 entities)");
  if (!(token_noise_prob >= 0.0 && token_noise_prob <= 1.0))
    throw ConfigError("synthetic dataset: token_noise_prob must lie in [0, 1]");
}

namespace {

const std::vector<std::string> kEntitySuffixes{"inc", "group", "city", "club"};
const std::vector<std::string> kRelationSuffixes{"of", "in", "by"};
const std::vector<std::string> kNoise{"the", "new", "old", "great", "north", "south", "first",
                                      "royal"};

constexpr double kStemNorm = 3.0;
constexpr double kSuffixNorm = 1.0;
constexpr double kNoiseNorm = 1.0;
// Cosine between any two suffix or noise tokens; function words share a
// common direction, as they do in real word-vector spaces.
constexpr double kFunctionWordCosine = 0.6;
constexpr std::size_t kFactsPerEntity = 3;

std::string random_stem(std::mt19937_64& rng) {
  static const char* consonants = "bdfgklmnprstvz";
  static const char* vowels = "aeiou";
  std::uniform_int_distribution<int> c(0, 13), v(0, 4), syll(3, 4);
  std::string s;
  for (int k = syll(rng); k > 0; --k) {
    s.push_back(consonants[c(rng)]);
    s.push_back(vowels[v(rng)]);
  }
  return s;
}

Vector random_direction(std::mt19937_64& rng, std::size_t dim, double norm) {
  std::normal_distribution<double> n01;
  Vector v(static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = n01(rng);
  return norm * v / v.norm();
}

struct Latent {
  std::vector<std::vector<std::string>> forms;  // per latent item
  std::vector<std::string> stems;
};

Latent make_forms(std::mt19937_64& rng, std::size_t items, std::size_t per_item,
                  const std::vector<std::string>& suffixes, double noise_prob,
                  std::set<std::string>& used_tokens) {
  Latent lat;
  std::bernoulli_distribution noisy(noise_prob);
  std::uniform_int_distribution<std::size_t> noise_pick(0, kNoise.size() - 1);
  std::set<std::string> used_forms;
  for (std::size_t e = 0; e < items; ++e) {
    std::string stem;
    do stem = random_stem(rng);
    while (used_tokens.count(stem));
    used_tokens.insert(stem);
    lat.stems.push_back(stem);
    std::vector<std::string> forms;
    std::vector<std::size_t> order(suffixes.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t f = 0; f < per_item; ++f) {
      std::string form = stem + " " + suffixes[order[f % order.size()]];
      if (f >= suffixes.size()) form += " " + suffixes[order[(f + 1) % order.size()]];
      if (noisy(rng)) form = kNoise[noise_pick(rng)] + " " + form;
      // Noise or suffix reuse can collide; extend until unique.
      while (used_forms.count(form)) form += " " + suffixes[order[0]];
      used_forms.insert(form);
      forms.push_back(form);
    }
    lat.forms.push_back(std::move(forms));
  }
  return lat;
}

}  // namespace

SynthDataset gen_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::set<std::string> used(kEntitySuffixes.begin(), kEntitySuffixes.end());
  used.insert(kRelationSuffixes.begin(), kRelationSuffixes.end());
  used.insert(kNoise.begin(), kNoise.end());
  auto ents = make_forms(rng, cfg.num_entities, cfg.surface_forms_per_entity, kEntitySuffixes,
                         cfg.token_noise_prob, used);
  auto rels = make_forms(rng, cfg.num_relations, cfg.paraphrases_per_relation, kRelationSuffixes,
                         cfg.token_noise_prob, used);

  // Latent graph: kFactsPerEntity facts (h, r, t) per entity as head, each
  // relation used at least once.
  struct Fact {
    std::size_t h, r, t;
  };
  std::uniform_int_distribution<std::size_t> pick_e(0, cfg.num_entities - 1),
      pick_r(0, cfg.num_relations - 1), pick_ef(0, cfg.surface_forms_per_entity - 1),
      pick_rf(0, cfg.paraphrases_per_relation - 1);
  auto other_entity = [&](std::size_t e) {
    std::size_t o;
    do o = pick_e(rng);
    while (o == e);
    return o;
  };
  std::vector<Fact> facts;
  std::vector<std::vector<std::size_t>> facts_of_head(cfg.num_entities), facts_of_rel(cfg.num_relations);
  auto add_fact = [&](std::size_t h, std::size_t r) {
    facts_of_head[h].push_back(facts.size());
    facts_of_rel[r].push_back(facts.size());
    facts.push_back({h, r, other_entity(h)});
  };
  for (std::size_t r = 0; r < cfg.num_relations; ++r) add_fact(pick_e(rng), r);
  for (std::size_t e = 0; e < cfg.num_entities; ++e)
    while (facts_of_head[e].size() < kFactsPerEntity) add_fact(e, pick_r(rng));

  struct Rendered {
    std::size_t fact, hf, rf, tf;
  };
  std::vector<Rendered> rendered;
  auto pick_in = [&](const std::vector<std::size_t>& v) {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
  };
  // Coverage sweep: every entity form as a head, every relation form once.
  for (std::size_t e = 0; e < cfg.num_entities; ++e)
    for (std::size_t f = 0; f < cfg.surface_forms_per_entity; ++f)
      rendered.push_back({pick_in(facts_of_head[e]), f, pick_rf(rng), pick_ef(rng)});
  for (std::size_t r = 0; r < cfg.num_relations; ++r)
    for (std::size_t f = 0; f < cfg.paraphrases_per_relation; ++f)
      rendered.push_back({pick_in(facts_of_rel[r]), pick_ef(rng), f, pick_ef(rng)});
  std::shuffle(rendered.begin(), rendered.end(), rng);
  std::uniform_int_distribution<std::size_t> pick_fact(0, facts.size() - 1);
  while (rendered.size() < cfg.num_triples)
    rendered.push_back({pick_fact(rng), pick_ef(rng), pick_rf(rng), pick_ef(rng)});

  SynthDataset ds;
  std::vector<std::int64_t> ent_gold, rel_gold;
  for (const auto& x : rendered) {
    const auto& f = facts[x.fact];
    const auto h = ds.kg.entities.add(ents.forms[f.h][x.hf]);
    if (h == ent_gold.size()) ent_gold.push_back(static_cast<std::int64_t>(f.h));
    const auto r = ds.kg.relations.add(rels.forms[f.r][x.rf]);
    if (r == rel_gold.size()) rel_gold.push_back(static_cast<std::int64_t>(f.r));
    const auto t = ds.kg.entities.add(ents.forms[f.t][x.tf]);
    if (t == ent_gold.size()) ent_gold.push_back(static_cast<std::int64_t>(f.t));
    ds.kg.triples.push_back({h, r, t});
  }
  ds.gold_entities = Clustering::from_labels(ent_gold, Namespace::kEntity);
  ds.gold_relations = Clustering::from_labels(rel_gold, Namespace::kRelation);

  auto oracle = [](const Clustering& c) {
    SideInfoPairs out;
    for (const auto& g : c.groups())
      for (std::size_t i = 0; i < g.size(); ++i)
        for (std::size_t j = i + 1; j < g.size(); ++j) out.push_back({g[i], g[j], 1.0, "oracle"});
    return dedupe_pairs(std::move(out));
  };
  ds.oracle_entity_pairs = oracle(ds.gold_entities);
  ds.oracle_relation_pairs = oracle(ds.gold_relations);

  ds.word_vectors.dim = cfg.word_dim;
  const Vector shared = random_direction(rng, cfg.word_dim, 1.0);
  auto add_vec = [&](const std::string& tok, double norm, bool function_word) {
    if (ds.word_vectors.table.count(tok)) return;
    Vector v = random_direction(rng, cfg.word_dim, 1.0);
    if (function_word) {
      v = std::sqrt(kFunctionWordCosine) * shared + std::sqrt(1.0 - kFunctionWordCosine) * v;
      v.normalize();
    }
    ds.word_vectors.table.emplace(tok, norm * v);
    ds.tokens.push_back(tok);
  };
  for (const auto& s : ents.stems) add_vec(s, kStemNorm, false);
  for (const auto& s : rels.stems) add_vec(s, kStemNorm, false);
  for (const auto& s : kEntitySuffixes) add_vec(s, kSuffixNorm, true);
  for (const auto& s : kRelationSuffixes) add_vec(s, kSuffixNorm, true);
  for (const auto& s : kNoise) add_vec(s, kNoiseNorm, true);
  return ds;
}

TripleSplit split_triples(const std::vector<Triple>& triples, double ratio, std::uint64_t seed) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) throw ConfigError("split ratio must lie in [0, 1]");
  std::vector<std::size_t> order(triples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto cut = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(triples.size())));
  TripleSplit out;
  for (std::size_t i = 0; i < order.size(); ++i)
    (i < cut ? out.first : out.second).push_back(triples[order[i]]);
  return out;
}

}  // namespace okgc
