#include "okgc/phrase_embed.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "okgc/errors.hpp"

namespace okgc {

EmbedMode parse_embed_mode(std::string_view s) {
  if (s == "normalized") return EmbedMode::kNormalized;
  if (s == "unnormalized") return EmbedMode::kUnnormalized;
  throw ConfigError("unknown embed mode '" + std::string(s) + "'");
}

std::string_view to_string(EmbedMode m) {
  return m == EmbedMode::kNormalized ? "normalized" : "unnormalized";
}

namespace {

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

WordVectors load_word_vectors(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  WordVectors wv;
  for (std::size_t n = 0; n < lines.size(); ++n) {
    auto fields = split_spaces(lines[n]);
    if (fields.empty()) continue;
    if (fields.size() < 2) throw ParseError(path.string(), n + 1, "token without components");
    const std::size_t d = fields.size() - 1;
    if (wv.dim == 0) {
      wv.dim = d;
    } else if (d != wv.dim) {
      throw ParseError(path.string(), n + 1,
                       "dimension " + std::to_string(d) + " != " + std::to_string(wv.dim));
    }
    Vector v(d);
    for (std::size_t k = 0; k < d; ++k) {
      const auto f = fields[k + 1];
      double x = 0.0;
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), x);
      if (ec != std::errc() || ptr != f.data() + f.size())
        throw ParseError(path.string(), n + 1, "non-numeric component '" + std::string(f) + "'");
      v[static_cast<Eigen::Index>(k)] = x;
    }
    wv.table.insert_or_assign(std::string(fields[0]), std::move(v));
  }
  return wv;
}

void write_word_vectors(const WordVectors& wv, const std::vector<std::string>& order,
                        const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << std::setprecision(17);
  for (const auto& tok : order) {
    const auto& v = wv.table.at(tok);
    out << tok;
    for (Eigen::Index k = 0; k < v.size(); ++k) out << ' ' << v[k];
    out << '\n';
  }
}

std::vector<std::string> phrase_tokens(std::string_view phrase) {
  std::vector<std::string> out;
  for (auto tok : split_spaces(phrase)) {
    std::string t(tok);
    for (auto& ch : t) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    out.push_back(std::move(t));
  }
  return out;
}

PhraseEmbeddings embed_phrases(const Vocabulary& vocab, const WordVectors& wv, EmbedMode mode) {
  PhraseEmbeddings pe;
  pe.mode = mode;
  pe.matrix = Matrix::Zero(static_cast<Eigen::Index>(vocab.size()),
                           static_cast<Eigen::Index>(wv.dim));
  for (MentionId id = 0; id < vocab.size(); ++id) {
    const auto tokens = phrase_tokens(vocab.surface(id));
    if (tokens.empty()) continue;
    Vector acc = Vector::Zero(static_cast<Eigen::Index>(wv.dim));
    for (const auto& tok : tokens) {
      auto it = wv.table.find(tok);
      if (it == wv.table.end()) continue;
      if (mode == EmbedMode::kNormalized) {
        const double norm = it->second.norm();
        if (norm > 0.0) acc += it->second / norm;
      } else {
        acc += it->second;
      }
    }
    pe.matrix.row(id) = (acc / static_cast<double>(tokens.size())).transpose();
  }
  return pe;
}

LookupTable init_lookup(std::size_t vocab_size, std::size_t width, std::uint64_t seed) {
  if (width == 0) throw ContractError("lookup width must be >= 1");
  const double bound = std::sqrt(6.0 / static_cast<double>(width));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-bound, bound);
  LookupTable lt;
  lt.matrix.resize(static_cast<Eigen::Index>(vocab_size), static_cast<Eigen::Index>(width));
  for (Eigen::Index i = 0; i < lt.matrix.rows(); ++i)
    for (Eigen::Index j = 0; j < lt.matrix.cols(); ++j) lt.matrix(i, j) = uni(rng);
  return lt;
}

}  // namespace okgc
