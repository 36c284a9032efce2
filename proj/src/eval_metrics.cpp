#include "okgc/eval_metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>
#include <ostream>
#include <set>

#include "okgc/errors.hpp"

namespace okgc {

double f1_score(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

namespace {

using Groups = std::vector<std::vector<std::size_t>>;  // indices into the universe

Groups restrict(const Clustering& c, const std::vector<MentionId>& universe) {
  std::map<std::uint32_t, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < universe.size(); ++i) by_label[c.label(universe[i])].push_back(i);
  Groups out;
  out.reserve(by_label.size());
  for (auto& [label, members] : by_label) out.push_back(std::move(members));
  return out;
}

// label of every universe index for `groups`
std::vector<std::size_t> owner(const Groups& groups, std::size_t n) {
  std::vector<std::size_t> out(n);
  for (std::size_t g = 0; g < groups.size(); ++g)
    for (auto i : groups[g]) out[i] = g;
  return out;
}

double macro(const Groups& a, const std::vector<std::size_t>& b_owner) {
  if (a.empty()) return 1.0;
  std::size_t pure = 0;
  for (const auto& g : a) {
    const auto first = b_owner[g.front()];
    pure += std::all_of(g.begin(), g.end(), [&](std::size_t i) { return b_owner[i] == first; });
  }
  return static_cast<double>(pure) / static_cast<double>(a.size());
}

double micro(const Groups& a, const std::vector<std::size_t>& b_owner, std::size_t n) {
  if (n == 0) return 1.0;
  std::size_t total = 0;
  for (const auto& g : a) {
    std::map<std::size_t, std::size_t> overlap;
    std::size_t best = 0;
    for (auto i : g) best = std::max(best, ++overlap[b_owner[i]]);
    total += best;
  }
  return static_cast<double>(total) / static_cast<double>(n);
}

double pairs_in(const Groups& a) {
  double total = 0.0;
  for (const auto& g : a) total += 0.5 * static_cast<double>(g.size()) * static_cast<double>(g.size() - 1);
  return total;
}

}  // namespace

MetricReport evaluate(const Clustering& pred, const Clustering& gold,
                      const std::vector<MentionId>& universe) {
  std::set<MentionId> seen;
  for (auto id : universe) {
    if (id >= pred.size() || id >= gold.size())
      throw DimensionError("mention " + std::to_string(id) + " not covered by both clusterings");
    if (!seen.insert(id).second)
      throw DimensionError("mention " + std::to_string(id) + " repeated in the universe");
  }
  const std::size_t n = universe.size();
  const Groups p = restrict(pred, universe), g = restrict(gold, universe);
  const auto p_owner = owner(p, n), g_owner = owner(g, n);

  MetricReport m;
  m.macro_p = macro(p, g_owner);
  m.macro_r = macro(g, p_owner);
  m.micro_p = micro(p, g_owner, n);
  m.micro_r = micro(g, p_owner, n);

  // hits = sum over (pred, gold) cells of C(|cell|, 2)
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> cells;
  for (std::size_t i = 0; i < n; ++i) ++cells[{p_owner[i], g_owner[i]}];
  double hits = 0.0;
  for (const auto& [key, c] : cells) hits += 0.5 * static_cast<double>(c) * static_cast<double>(c - 1);
  const double pp = pairs_in(p), gp = pairs_in(g);
  m.pair_p = pp > 0.0 ? hits / pp : 1.0;
  m.pair_r = gp > 0.0 ? hits / gp : 1.0;

  m.macro_f1 = f1_score(m.macro_p, m.macro_r);
  m.micro_f1 = f1_score(m.micro_p, m.micro_r);
  m.pair_f1 = f1_score(m.pair_p, m.pair_r);
  m.mean_f1 = (m.macro_f1 + m.micro_f1 + m.pair_f1) / 3.0;
  return m;
}

MetricReport evaluate(const Clustering& pred, const Clustering& gold) {
  if (pred.size() != gold.size())
    throw DimensionError("clusterings cover " + std::to_string(pred.size()) + " and " +
                         std::to_string(gold.size()) + " mentions");
  std::vector<MentionId> all(pred.size());
  std::iota(all.begin(), all.end(), MentionId{0});
  return evaluate(pred, gold, all);
}

void write_metrics(std::ostream& out, const MetricReport& m, const std::string& prefix) {
  const std::pair<const char*, double> rows[] = {
      {"macro_p", m.macro_p}, {"macro_r", m.macro_r}, {"macro_f1", m.macro_f1},
      {"micro_p", m.micro_p}, {"micro_r", m.micro_r}, {"micro_f1", m.micro_f1},
      {"pair_p", m.pair_p},   {"pair_r", m.pair_r},   {"pair_f1", m.pair_f1},
      {"mean_f1", m.mean_f1}};
  char buf[32];
  for (const auto& [name, v] : rows) {
    std::snprintf(buf, sizeof buf, "%.6f", v);
    out << prefix << name << '=' << buf << '\n';
  }
}

}  // namespace okgc
