#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace okgc {

// Index into the entity or relation vocabulary. The two id spaces are
// disjoint namespaces; which one applies is carried by the container.
using MentionId = std::uint32_t;

enum class Namespace { kEntity, kRelation };

std::string_view to_string(Namespace ns);

class Vocabulary {
 public:
  // Returns the id of `surface`, inserting it at the end when new.
  MentionId add(const std::string& surface);

  std::optional<MentionId> find(std::string_view surface) const;
  const std::string& surface(MentionId id) const { return forms_.at(id); }
  std::size_t size() const { return forms_.size(); }
  bool empty() const { return forms_.empty(); }
  const std::vector<std::string>& forms() const { return forms_; }

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
  };
  std::vector<std::string> forms_;
  std::unordered_map<std::string, MentionId, Hash, std::equal_to<>> index_;
};

struct Triple {
  MentionId head = 0;
  MentionId rel = 0;
  MentionId tail = 0;

  friend bool operator==(const Triple&, const Triple&) = default;
};

// Multiset of (NP, RP, NP) triples plus the two vocabularies.
struct OpenKG {
  std::vector<Triple> triples;
  Vocabulary entities;
  Vocabulary relations;

  // Entity ids that occur in head position, ascending.
  std::vector<MentionId> head_mentions() const;
  std::vector<MentionId> all_entity_mentions() const;
};

// A hard partition of one namespace's vocabulary. Labels are dense in
// [0, num_clusters).
class Clustering {
 public:
  Clustering() = default;

  // Labels must already be dense; throws ContractError otherwise.
  Clustering(std::vector<std::uint32_t> labels, Namespace ns);

  // Accepts arbitrary integer labels and renumbers them densely in order of
  // first appearance.
  static Clustering from_labels(const std::vector<std::int64_t>& raw, Namespace ns);
  static Clustering singletons(std::size_t n, Namespace ns);

  std::size_t size() const { return labels_.size(); }
  std::size_t num_clusters() const { return num_clusters_; }
  std::uint32_t label(MentionId id) const { return labels_.at(id); }
  const std::vector<std::uint32_t>& labels() const { return labels_; }
  Namespace ns() const { return ns_; }

  // Members of each cluster, ascending ids within a cluster, clusters in
  // label order.
  std::vector<std::vector<MentionId>> groups() const;

  // Relabelled so cluster labels follow the order of their smallest member.
  Clustering canonical() const;

  // Same partition irrespective of label names.
  bool same_partition(const Clustering& other) const;

  friend bool operator==(const Clustering&, const Clustering&) = default;

 private:
  std::vector<std::uint32_t> labels_;
  std::size_t num_clusters_ = 0;
  Namespace ns_ = Namespace::kEntity;
};

OpenKG load_triples(const std::filesystem::path& path);
void write_triples(const OpenKG& kg, const std::filesystem::path& path);

Clustering load_clusters(const std::filesystem::path& path, const Vocabulary& vocab,
                         Namespace ns = Namespace::kEntity);
Clustering parse_clusters(const std::vector<std::string>& lines, const Vocabulary& vocab,
                          Namespace ns, const std::string& origin = "<memory>");
void write_clusters(const Clustering& c, const Vocabulary& vocab,
                    const std::filesystem::path& path);

// Reads all lines (without the trailing newline). Throws IoError.
std::vector<std::string> read_lines(const std::filesystem::path& path);
std::vector<std::string> split_tabs(std::string_view line);

}  // namespace okgc
