#include "okgc/side_info.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "okgc/errors.hpp"
#include "okgc/phrase_embed.hpp"

namespace okgc {

namespace {

std::vector<std::string> token_set(const std::string& phrase) {
  auto toks = phrase_tokens(phrase);
  std::sort(toks.begin(), toks.end());
  toks.erase(std::unique(toks.begin(), toks.end()), toks.end());
  return toks;
}

double idf_weight(const IdfStats& freq, const std::string& w) {
  auto it = freq.find(w);
  const double f = it == freq.end() ? 1.0 : static_cast<double>(it->second);
  return 1.0 / std::log1p(f);
}

}  // namespace

SideInfoPairs dedupe_pairs(SideInfoPairs pairs) {
  std::map<std::pair<MentionId, MentionId>, SideInfoPair> best;
  for (auto& p : pairs) {
    if (p.a == p.b) continue;
    if (p.a > p.b) std::swap(p.a, p.b);
    auto [it, inserted] = best.try_emplace({p.a, p.b}, p);
    if (!inserted && p.score > it->second.score) it->second = p;
  }
  SideInfoPairs out;
  out.reserve(best.size());
  for (auto& [key, p] : best) out.push_back(std::move(p));
  return out;
}

SideInfoPairs merge_pairs(const std::vector<SideInfoPairs>& parts) {
  SideInfoPairs all;
  for (const auto& p : parts) all.insert(all.end(), p.begin(), p.end());
  return dedupe_pairs(std::move(all));
}

IdfStats token_frequencies(const Vocabulary& vocab) {
  IdfStats freq;
  for (const auto& form : vocab.forms())
    for (auto& t : token_set(form)) ++freq[t];
  return freq;
}

double idf_overlap_score(const std::vector<std::string>& a, const std::vector<std::string>& b,
                         const IdfStats& freq) {
  std::set<std::string> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  double inter = 0.0, uni = 0.0;
  for (const auto& w : sa) {
    const double wt = idf_weight(freq, w);
    uni += wt;
    if (sb.count(w)) inter += wt;
  }
  for (const auto& w : sb)
    if (!sa.count(w)) uni += idf_weight(freq, w);
  return uni > 0.0 ? inter / uni : 0.0;
}

SideInfoPairs idf_overlap_pairs(const Vocabulary& vocab, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0))
    throw ConfigError("IDF threshold must lie in [0, 1]");
  const auto freq = token_frequencies(vocab);
  std::vector<std::vector<std::string>> tokens;
  tokens.reserve(vocab.size());
  std::map<std::string, std::vector<MentionId>> index;
  for (MentionId id = 0; id < vocab.size(); ++id) {
    tokens.push_back(token_set(vocab.surface(id)));
    for (const auto& t : tokens.back()) index[t].push_back(id);
  }
  std::set<std::pair<MentionId, MentionId>> candidates;
  for (const auto& [tok, ids] : index)
    for (std::size_t i = 0; i < ids.size(); ++i)
      for (std::size_t j = i + 1; j < ids.size(); ++j) candidates.emplace(ids[i], ids[j]);

  SideInfoPairs out;
  for (const auto& [a, b] : candidates) {
    const double s = idf_overlap_score(tokens[a], tokens[b], freq);
    if (s >= threshold && s > 0.0) out.push_back({a, b, s, "idf"});
  }
  return out;
}

std::string morph_normalize(std::string_view phrase) {
  std::vector<std::string> words;
  std::istringstream in{std::string(phrase)};
  std::string tok;
  while (in >> tok) {
    std::string w;
    for (char ch : tok) w.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    if (w.size() >= 2 && w.compare(w.size() - 2, 2, "'s") == 0) w.resize(w.size() - 2);
    std::string kept;
    for (char ch : w)
      if (!std::ispunct(static_cast<unsigned char>(ch))) kept.push_back(ch);
    if (kept.size() >= 4 && kept.back() == 's') kept.pop_back();
    if (!kept.empty()) words.push_back(std::move(kept));
  }
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out.push_back(' ');
    out += w;
  }
  return out;
}

SideInfoPairs morph_pairs(const Vocabulary& vocab) {
  std::map<std::string, std::vector<MentionId>> groups;
  for (MentionId id = 0; id < vocab.size(); ++id) {
    auto key = morph_normalize(vocab.surface(id));
    if (!key.empty()) groups[key].push_back(id);
  }
  SideInfoPairs out;
  for (const auto& [key, ids] : groups)
    for (std::size_t i = 0; i < ids.size(); ++i)
      for (std::size_t j = i + 1; j < ids.size(); ++j) out.push_back({ids[i], ids[j], 1.0, "morph"});
  return dedupe_pairs(std::move(out));
}

SideInfoPairs score_imported_clusters(const std::vector<std::vector<MentionId>>& clusters,
                                      const std::string& source) {
  std::map<MentionId, int> eta;
  std::vector<std::vector<MentionId>> sets;
  for (const auto& c : clusters) {
    std::vector<MentionId> s(c.begin(), c.end());
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    for (auto m : s) ++eta[m];
    sets.push_back(std::move(s));
  }
  SideInfoPairs out;
  for (const auto& s : sets) {
    if (s.size() < 2) continue;
    const double inv = 1.0 / static_cast<double>(s.size() * s.size());
    for (std::size_t i = 0; i < s.size(); ++i)
      for (std::size_t j = i + 1; j < s.size(); ++j)
        out.push_back({s[i], s[j], inv * std::exp(2.0 - (eta[s[i]] + eta[s[j]])), source});
  }
  return dedupe_pairs(std::move(out));
}

ImportedClusters load_imported_clusters(const std::filesystem::path& path,
                                        const Vocabulary& vocab) {
  ImportedClusters out;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto& line = lines[i];
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string key = "# source:";
      if (line.rfind(key, 0) == 0) {
        std::istringstream in(line.substr(key.size()));
        in >> out.source;
        if (out.source.empty()) throw ParseError(path.string(), i + 1, "empty source name");
      }
      continue;
    }
    std::vector<MentionId> cluster;
    for (const auto& form : split_tabs(line)) {
      if (form.empty()) continue;
      if (auto id = vocab.find(form))
        cluster.push_back(*id);
      else
        ++out.unknown_mentions;
    }
    if (!cluster.empty()) out.clusters.push_back(std::move(cluster));
  }
  return out;
}

void write_pairs(const SideInfoPairs& pairs, const Vocabulary& vocab,
                 const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  char buf[64];
  for (const auto& p : pairs) {
    auto res = std::to_chars(buf, buf + sizeof buf, p.score);
    out << vocab.surface(p.a) << '\t' << vocab.surface(p.b) << '\t'
        << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf)) << '\t' << p.source
        << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

SideInfoPairs load_pairs(const std::filesystem::path& path, const Vocabulary& vocab) {
  SideInfoPairs out;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto f = split_tabs(lines[i]);
    if (f.size() != 3 && f.size() != 4)
      throw ParseError(path.string(), i + 1, "expected a<TAB>b<TAB>score[<TAB>source]");
    auto a = vocab.find(f[0]);
    auto b = vocab.find(f[1]);
    if (!a) throw ParseError(path.string(), i + 1, "unknown mention '" + f[0] + "'");
    if (!b) throw ParseError(path.string(), i + 1, "unknown mention '" + f[1] + "'");
    double score = 0.0;
    auto res = std::from_chars(f[2].data(), f[2].data() + f[2].size(), score);
    if (res.ec != std::errc() || res.ptr != f[2].data() + f[2].size() || !(score > 0.0) ||
        !std::isfinite(score))
      throw ParseError(path.string(), i + 1, "score must be a positive number");
    if (*a == *b) throw ParseError(path.string(), i + 1, "pair of identical mentions");
    out.push_back({*a, *b, score, f.size() == 4 ? f[3] : std::string("imported")});
  }
  return dedupe_pairs(std::move(out));
}

ad::Var side_info_loss(const SideInfoPairs& pairs, const ad::Var& lookup) {
  if (pairs.empty()) return ad::scalar_constant(0.0);
  std::vector<Eigen::Index> ra, rb;
  Matrix w(static_cast<Eigen::Index>(pairs.size()), 1);
  ra.reserve(pairs.size());
  rb.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    if (p.a >= lookup.rows() || p.b >= lookup.rows())
      throw ContractError("side-info pair refers to a mention outside the lookup table");
    ra.push_back(p.a);
    rb.push_back(p.b);
    w(static_cast<Eigen::Index>(i), 0) = p.score;
  }
  auto diff = ad::sub(ad::gather_rows(lookup, ra), ad::gather_rows(lookup, rb));
  auto per_pair = ad::row_sum(ad::square(diff));
  return ad::scale(ad::sum(ad::mul(per_pair, ad::constant(std::move(w)))),
                   1.0 / static_cast<double>(lookup.cols()));
}

}  // namespace okgc
