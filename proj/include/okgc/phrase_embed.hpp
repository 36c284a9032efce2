#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "okgc/kg_core.hpp"
#include "okgc/linalg.hpp"

namespace okgc {

struct WordVectors {
  std::size_t dim = 0;
  std::unordered_map<std::string, Vector> table;
};

enum class EmbedMode { kNormalized, kUnnormalized };

EmbedMode parse_embed_mode(std::string_view s);
std::string_view to_string(EmbedMode m);

// One row per MentionId.
struct PhraseEmbeddings {
  Matrix matrix;
  EmbedMode mode = EmbedMode::kNormalized;
};

// Trainable input representation, one row per MentionId.
struct LookupTable {
  Matrix matrix;
};

// Parses `token v1 ... vd` lines; the first line fixes d.
WordVectors load_word_vectors(const std::filesystem::path& path);
void write_word_vectors(const WordVectors& wv, const std::vector<std::string>& order,
                        const std::filesystem::path& path);

// Lowercased whitespace tokens.
std::vector<std::string> phrase_tokens(std::string_view phrase);

// Mean of (optionally unit-normalised) token vectors. OOV tokens count as
// zero vectors in the denominator.
PhraseEmbeddings embed_phrases(const Vocabulary& vocab, const WordVectors& wv, EmbedMode mode);

// Entries i.i.d. uniform on [-sqrt(6/width), sqrt(6/width)].
LookupTable init_lookup(std::size_t vocab_size, std::size_t width, std::uint64_t seed);

}  // namespace okgc
