#include "okgc/config.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "okgc/errors.hpp"

namespace okgc {

InitMethod parse_init_method(std::string_view s) {
  if (s == "hac") return InitMethod::kHac;
  if (s == "kmeans") return InitMethod::kKmeans;
  throw ConfigError("unknown init method '" + std::string(s) + "' (expected hac|kmeans)");
}

std::string_view to_string(InitMethod m) { return m == InitMethod::kHac ? "hac" : "kmeans"; }

std::vector<std::size_t> TrainConfig::effective_hidden() const {
  auto h = hidden;
  if (no_hidden_layer && !h.empty()) h.pop_back();
  return h;
}

void TrainConfig::validate() const {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(what);
  };
  need(theta_e >= 0.0 && theta_r >= 0.0, "HAC thresholds must be >= 0");
  need(var_floor > 0.0, "var_floor must be positive");
  need(input_dim >= 1 && latent_dim >= 1, "input_dim and latent_dim must be >= 1");
  for (auto w : hidden) need(w >= 1, "hidden widths must be >= 1");
  need(lr_step1 > 0.0 && lr_step2 > 0.0, "learning rates must be positive");
  need(batch_size >= 1 && eval_batch_size >= 1, "batch sizes must be >= 1");
  need(l1_lambda >= 0.0, "l1_lambda must be >= 0");
  need(tau > 0.0, "tau must be positive");
  need(num_negatives >= 1, "num_negatives must be >= 1");
  need(threads >= 1, "threads must be >= 1");
  need(idf_threshold_e >= 0.0 && idf_threshold_e <= 1.0 && idf_threshold_r >= 0.0 &&
           idf_threshold_r <= 1.0,
       "IDF thresholds must lie in [0, 1]");
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(out))
    throw ConfigError(std::string(key) + ": expected a number, got '" + std::string(v) + "'");
  return out;
}

std::uint64_t to_uint(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw ConfigError(std::string(key) + ": expected a non-negative integer, got '" +
                      std::string(v) + "'");
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(std::string(key) + ": expected true|false, got '" + std::string(v) + "'");
}

std::vector<std::size_t> to_widths(std::string_view key, std::string_view v) {
  std::vector<std::size_t> out;
  std::string item;
  std::istringstream in{std::string(v)};
  while (std::getline(in, item, ',')) {
    auto t = trim(item);
    if (t.empty()) continue;
    out.push_back(static_cast<std::size_t>(to_uint(key, t)));
  }
  return out;
}

std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fmt(bool v) { return v ? "true" : "false"; }

std::string fmt_widths(const std::vector<std::size_t>& w) {
  std::string out;
  for (std::size_t i = 0; i < w.size(); ++i) out += (i ? ", " : "") + std::to_string(w[i]);
  return out;
}

struct Field {
  std::string key;
  std::string help;
  std::function<void(TrainConfig&, std::string_view)> set;
  std::function<std::string(const TrainConfig&)> get;
};

#define OKGC_NUM(k, member, help)                                                                 \
  Field {                                                                                         \
    k, help, [](TrainConfig& c, std::string_view v) { c.member = to_double(k, v); },              \
        [](const TrainConfig& c) { return fmt(c.member); }                                        \
  }
#define OKGC_UINT(k, member, help)                                                                \
  Field {                                                                                         \
    k, help,                                                                                      \
        [](TrainConfig& c, std::string_view v) {                                                  \
          c.member = static_cast<decltype(c.member)>(to_uint(k, v));                              \
        },                                                                                        \
        [](const TrainConfig& c) { return std::to_string(c.member); }                             \
  }
#define OKGC_BOOL(k, member, help)                                                                \
  Field {                                                                                         \
    k, help, [](TrainConfig& c, std::string_view v) { c.member = to_bool(k, v); },                \
        [](const TrainConfig& c) { return fmt(c.member); }                                        \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      OKGC_NUM("init.theta_e", theta_e, "HAC cosine-distance cut for entities"),
      OKGC_NUM("init.theta_r", theta_r, "HAC cosine-distance cut for relations"),
      Field{"init.method", "mixture initialisation: hac | kmeans",
            [](TrainConfig& c, std::string_view v) { c.init = parse_init_method(v); },
            [](const TrainConfig& c) { return std::string(to_string(c.init)); }},
      OKGC_UINT("init.kmeans_k_e", kmeans_k_e, "k-means K for entities (0: HAC count)"),
      OKGC_UINT("init.kmeans_k_r", kmeans_k_r, "k-means K for relations (0: HAC count)"),
      Field{"init.embed_mode", "phrase averaging: normalized | unnormalized",
            [](TrainConfig& c, std::string_view v) { c.embed_mode = parse_embed_mode(v); },
            [](const TrainConfig& c) { return std::string(to_string(c.embed_mode)); }},
      OKGC_NUM("init.var_floor", var_floor, "minimum initial component variance"),
      OKGC_UINT("model.input_dim", input_dim, "lookup-table width"),
      Field{"model.hidden", "encoder hidden widths, comma separated",
            [](TrainConfig& c, std::string_view v) { c.hidden = to_widths("model.hidden", v); },
            [](const TrainConfig& c) { return fmt_widths(c.hidden); }},
      OKGC_UINT("model.latent_dim", latent_dim, "latent dimension"),
      OKGC_BOOL("model.no_hidden_layer", no_hidden_layer, "drop the last hidden layer"),
      OKGC_UINT("train.epochs_step1", epochs_step1, "encoder epochs"),
      OKGC_UINT("train.epochs_step2", epochs_step2, "decoder epochs"),
      OKGC_NUM("train.lr_step1", lr_step1, "Adam learning rate, encoder step"),
      OKGC_NUM("train.lr_step2", lr_step2, "Adam learning rate, decoder step"),
      OKGC_UINT("train.batch_size", batch_size, "triples per training batch"),
      OKGC_UINT("train.eval_batch_size", eval_batch_size, "mentions per inference batch"),
      OKGC_NUM("train.l1_lambda", l1_lambda, "L1 regulariser weight"),
      OKGC_BOOL("train.freeze_lookup_step1", freeze_lookup_step1,
                "keep the lookup table fixed during the encoder step"),
      OKGC_BOOL("train.freeze_lookup_step2", freeze_lookup_step2,
                "keep the lookup table fixed during the decoder step"),
      OKGC_UINT("train.seed", seed, "master random seed"),
      OKGC_UINT("train.threads", threads, "threads for pairwise-distance kernels"),
      OKGC_NUM("kge.tau", tau, "soft-argmax temperature"),
      OKGC_UINT("kge.num_negatives", num_negatives, "corruptions per positive triple"),
      Field{"kge.loss", "triple loss: bce | margin | transe",
            [](TrainConfig& c, std::string_view v) { c.kge_loss = parse_kge_loss(v); },
            [](const TrainConfig& c) { return std::string(to_string(c.kge_loss)); }},
      OKGC_BOOL("kge.disabled", no_kge, "drop the KGE term from the decoder step"),
      OKGC_NUM("side_info.idf_threshold_e", idf_threshold_e, "IDF overlap cut for entities"),
      OKGC_NUM("side_info.idf_threshold_r", idf_threshold_r, "IDF overlap cut for relations"),
      OKGC_BOOL("inference.pipeline_vae_hac", pipeline_vae_hac,
                "cluster latent means with HAC instead of the mixture"),
  };
  return table;
}

#undef OKGC_NUM
#undef OKGC_UINT
#undef OKGC_BOOL

const Field& field(std::string_view key) {
  for (const auto& f : fields())
    if (f.key == key) return f;
  throw ConfigError("unknown configuration key '" + std::string(key) + "'");
}

}  // namespace

void set_config_value(TrainConfig& cfg, std::string_view key, std::string_view value) {
  field(key).set(cfg, trim(value));
}

TrainConfig parse_train_config(std::string_view text, const std::string& origin) {
  TrainConfig cfg;
  std::string section;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    auto hash = raw.find('#');
    auto line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    auto where = [&](const std::string& msg) {
      return ConfigError(origin + ":" + std::to_string(lineno) + ": " + msg);
    };
    if (line.front() == '[') {
      if (line.back() != ']') throw where("unterminated section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw where("expected key = value");
    if (section.empty()) throw where("key outside of any section");
    const std::string key = section + "." + trim(std::string_view(line).substr(0, eq));
    if (!seen.insert(key).second) throw where("repeated key '" + key + "'");
    try {
      set_config_value(cfg, key, std::string_view(line).substr(eq + 1));
    } catch (const ConfigError& e) {
      throw where(e.what());
    }
  }
  cfg.validate();
  return cfg;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::string text;
  for (const auto& l : read_lines(path)) text += l + "\n";
  return parse_train_config(text, path.string());
}

std::string to_config_text(const TrainConfig& cfg) {
  std::string out, section;
  for (const auto& f : fields()) {
    const auto dot = f.key.find('.');
    const auto sec = f.key.substr(0, dot);
    if (sec != section) {
      out += (section.empty() ? "[" : "\n[") + sec + "]\n";
      section = sec;
    }
    out += f.key.substr(dot + 1) + " = " + f.get(cfg) + "\n";
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> config_schema() {
  std::vector<std::pair<std::string, std::string>> out;
  const TrainConfig defaults;
  for (const auto& f : fields()) out.emplace_back(f.key, f.help + " (default " + f.get(defaults) + ")");
  return out;
}

void apply_ablation(TrainConfig& cfg, std::string_view name) {
  if (name == "no-kge")
    cfg.no_kge = true;
  else if (name == "no-hidden-layer")
    cfg.no_hidden_layer = true;
  else if (name == "pipeline-vae-hac")
    cfg.pipeline_vae_hac = true;
  else if (name == "kmeans-init")
    cfg.init = InitMethod::kKmeans;
  else if (name == "transe")
    cfg.kge_loss = KgeLossKind::kTransE;
  else if (name == "margin")
    cfg.kge_loss = KgeLossKind::kMargin;
  else if (name == "unnormalized")
    cfg.embed_mode = EmbedMode::kUnnormalized;
  else
    throw ConfigError("unknown ablation '" + std::string(name) + "'");
}

bool operator==(const TrainConfig& a, const TrainConfig& b) {
  for (const auto& f : fields())
    if (f.get(a) != f.get(b)) return false;
  return true;
}

}  // namespace okgc
