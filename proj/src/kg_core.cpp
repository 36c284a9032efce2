#include "okgc/kg_core.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <unordered_map>

#include "okgc/errors.hpp"

namespace okgc {

std::string_view to_string(Namespace ns) {
  return ns == Namespace::kEntity ? "entity" : "relation";
}

MentionId Vocabulary::add(const std::string& surface) {
  auto it = index_.find(surface);
  if (it != index_.end()) return it->second;
  const auto id = static_cast<MentionId>(forms_.size());
  forms_.push_back(surface);
  index_.emplace(surface, id);
  return id;
}

std::optional<MentionId> Vocabulary::find(std::string_view surface) const {
  auto it = index_.find(surface);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<MentionId> OpenKG::head_mentions() const {
  std::vector<bool> seen(entities.size(), false);
  for (const auto& t : triples) seen[t.head] = true;
  std::vector<MentionId> out;
  for (MentionId i = 0; i < seen.size(); ++i)
    if (seen[i]) out.push_back(i);
  return out;
}

std::vector<MentionId> OpenKG::all_entity_mentions() const {
  std::vector<MentionId> out(entities.size());
  std::iota(out.begin(), out.end(), 0u);
  return out;
}

Clustering::Clustering(std::vector<std::uint32_t> labels, Namespace ns)
    : labels_(std::move(labels)), ns_(ns) {
  std::uint32_t max_label = 0;
  for (auto l : labels_) max_label = std::max(max_label, l);
  num_clusters_ = labels_.empty() ? 0 : max_label + 1;
  std::vector<bool> used(num_clusters_, false);
  for (auto l : labels_) used[l] = true;
  if (std::find(used.begin(), used.end(), false) != used.end())
    throw ContractError("cluster labels are not dense");
}

Clustering Clustering::from_labels(const std::vector<std::int64_t>& raw, Namespace ns) {
  std::unordered_map<std::int64_t, std::uint32_t> remap;
  std::vector<std::uint32_t> labels;
  labels.reserve(raw.size());
  for (auto r : raw) {
    auto [it, inserted] = remap.try_emplace(r, static_cast<std::uint32_t>(remap.size()));
    labels.push_back(it->second);
  }
  return Clustering(std::move(labels), ns);
}

Clustering Clustering::singletons(std::size_t n, Namespace ns) {
  std::vector<std::uint32_t> labels(n);
  std::iota(labels.begin(), labels.end(), 0u);
  return Clustering(std::move(labels), ns);
}

std::vector<std::vector<MentionId>> Clustering::groups() const {
  std::vector<std::vector<MentionId>> out(num_clusters_);
  for (MentionId i = 0; i < labels_.size(); ++i) out[labels_[i]].push_back(i);
  return out;
}

Clustering Clustering::canonical() const {
  std::vector<std::int64_t> raw(labels_.begin(), labels_.end());
  return from_labels(raw, ns_);
}

bool Clustering::same_partition(const Clustering& other) const {
  return size() == other.size() && canonical().labels_ == other.canonical().labels_;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(std::move(line));
  return lines;
}

std::vector<std::string> split_tabs(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      break;
    }
    out.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

OpenKG load_triples(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  OpenKG kg;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto fields = split_tabs(lines[i]);
    if (fields.size() != 3)
      throw ParseError(path.string(), i + 1,
                       "expected 3 tab-separated fields, got " + std::to_string(fields.size()));
    for (const auto& f : fields)
      if (f.empty()) throw ParseError(path.string(), i + 1, "empty field");
    Triple t;
    t.head = kg.entities.add(fields[0]);
    t.rel = kg.relations.add(fields[1]);
    t.tail = kg.entities.add(fields[2]);
    kg.triples.push_back(t);
  }
  if (kg.triples.empty()) throw ParseError(path.string(), 0, "empty KG: no triples");
  return kg;
}

void write_triples(const OpenKG& kg, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& t : kg.triples)
    out << kg.entities.surface(t.head) << '\t' << kg.relations.surface(t.rel) << '\t'
        << kg.entities.surface(t.tail) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

Clustering parse_clusters(const std::vector<std::string>& lines, const Vocabulary& vocab,
                          Namespace ns, const std::string& origin) {
  constexpr std::int64_t kUnassigned = -1;
  std::vector<std::int64_t> raw(vocab.size(), kUnassigned);
  std::int64_t next = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    for (const auto& member : split_tabs(lines[i])) {
      if (member.empty()) continue;
      auto id = vocab.find(member);
      if (!id) throw ParseError(origin, i + 1, "unknown mention '" + member + "'");
      if (raw[*id] != kUnassigned)
        throw ParseError(origin, i + 1, "duplicate membership for '" + member + "'");
      raw[*id] = next;
    }
    ++next;
  }
  for (auto& r : raw)
    if (r == kUnassigned) r = next++;
  return Clustering::from_labels(raw, ns);
}

Clustering load_clusters(const std::filesystem::path& path, const Vocabulary& vocab,
                         Namespace ns) {
  return parse_clusters(read_lines(path), vocab, ns, path.string());
}

void write_clusters(const Clustering& c, const Vocabulary& vocab,
                    const std::filesystem::path& path) {
  if (c.size() != vocab.size()) throw DimensionError("clustering does not cover vocabulary");
  // groups() already sorts members; canonical order sorts lines by smallest member.
  const auto groups = c.canonical().groups();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& g : groups) {
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (k) out << '\t';
      out << vocab.surface(g[k]);
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace okgc
