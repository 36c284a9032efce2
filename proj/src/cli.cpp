#include "okgc/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <ostream>
#include <set>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <json.hpp>
#include <openssl/crypto.h>
#include <openssl/evp.h>

#include "okgc/config.hpp"
#include "okgc/data_builder.hpp"
#include "okgc/errors.hpp"
#include "okgc/eval_metrics.hpp"
#include "okgc/kg_core.hpp"
#include "okgc/phrase_embed.hpp"
#include "okgc/side_info.hpp"
#include "okgc/trainer.hpp"

namespace okgc {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kVersion = "0.1.0";
constexpr const char* kManifestName = "run_manifest.json";

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
    throw IoError("SHA-256 unavailable");
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0)
    EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount()));
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  std::string hex;
  char two[3];
  for (unsigned i = 0; i < len; ++i) {
    std::snprintf(two, sizeof two, "%02x", md[i]);
    hex += two;
  }
  return hex;
}

// Per-run record written next to the outputs.
class Manifest {
 public:
  Manifest(std::string command, std::vector<std::string> args)
      : command_(std::move(command)), args_(std::move(args)) {}

  void input(const fs::path& p) {
    inputs_.push_back({{"path", p.string()}, {"sha256", sha256_file(p)}, {"bytes", fs::file_size(p)}});
  }
  void output(const fs::path& p) { outputs_.push_back(p.string()); }
  void set(const std::string& key, json value) { extra_[key] = std::move(value); }

  template <class F>
  auto stage(const std::string& name, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    auto finish = [&] {
      stages_[name] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      finish();
    } else {
      auto r = f();
      finish();
      return r;
    }
  }

  void write(const fs::path& dir) const {
    json j;
    j["command"] = command_;
    j["args"] = args_;
    j["inputs"] = inputs_;
    j["outputs"] = outputs_;
    j["stage_seconds"] = stages_;
    j["versions"] = {{"okgc", kVersion},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                   std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)},
                     {"openssl", OpenSSL_version(OPENSSL_VERSION)},
                     {"compiler", __VERSION__}};
    for (const auto& [k, v] : extra_.items()) j[k] = v;
    std::ofstream out(dir / kManifestName);
    if (!out) throw IoError("cannot write " + (dir / kManifestName).string());
    out << j.dump(2) << '\n';
  }

 private:
  std::string command_;
  std::vector<std::string> args_;
  json inputs_ = json::array();
  json outputs_ = json::array();
  json stages_ = json::object();
  json extra_ = json::object();
};

fs::path prepare_dir(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw IoError("cannot create " + p.string() + ": " + ec.message());
  return p;
}

// Training flags map one-to-one onto configuration keys; explicitly given
// flags override the config file, which overrides the built-in defaults.
struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> values;
  std::vector<std::pair<CLI::Option*, std::string>> options;
  std::vector<std::string> sets;
  std::vector<std::string> ablations;
  bool freeze_lookup_step1 = false;
  bool freeze_lookup_step2 = false;
};

const std::vector<std::pair<std::string, std::string>> kConfigFlags = {
    {"--theta-e", "init.theta_e"},
    {"--theta-r", "init.theta_r"},
    {"--init", "init.method"},
    {"--kmeans-k-e", "init.kmeans_k_e"},
    {"--kmeans-k-r", "init.kmeans_k_r"},
    {"--embed-mode", "init.embed_mode"},
    {"--var-floor", "init.var_floor"},
    {"--input-dim", "model.input_dim"},
    {"--hidden", "model.hidden"},
    {"--latent-dim", "model.latent_dim"},
    {"--epochs-step1", "train.epochs_step1"},
    {"--epochs-step2", "train.epochs_step2"},
    {"--lr-step1", "train.lr_step1"},
    {"--lr-step2", "train.lr_step2"},
    {"--batch-size", "train.batch_size"},
    {"--eval-batch-size", "train.eval_batch_size"},
    {"--l1-lambda", "train.l1_lambda"},
    {"--seed", "train.seed"},
    {"--threads", "train.threads"},
    {"--tau", "kge.tau"},
    {"--num-negatives", "kge.num_negatives"},
    {"--kge-loss", "kge.loss"},
    {"--idf-threshold-e", "side_info.idf_threshold_e"},
    {"--idf-threshold-r", "side_info.idf_threshold_r"},
};

const std::vector<std::string> kAblations = {"no-kge",     "no-hidden-layer", "pipeline-vae-hac",
                                             "kmeans-init", "transe",         "margin",
                                             "unnormalized"};

std::string schema_help(const std::string& key) {
  for (const auto& [k, help] : config_schema())
    if (k == key) return help;
  return {};
}

void add_config_flags(CLI::App* sub, ConfigFlags& f) {
  sub->add_option("--config", f.config_path, "configuration file ([section] key = value)");
  for (const auto& [flag, key] : kConfigFlags) {
    const std::string k = key;
    auto* opt = sub->add_option(flag, f.values[key], schema_help(key))
                    ->check(CLI::Validator(
                        [k](std::string& v) {
                          TrainConfig probe;
                          try {
                            set_config_value(probe, k, v);
                          } catch (const ConfigError& e) {
                            return std::string(e.what());
                          }
                          return std::string();
                        },
                        "", ""));
    f.options.emplace_back(opt, key);
  }
  sub->add_option("--set", f.sets, "override any configuration key: section.key=value");
  sub->add_option("--ablation", f.ablations, "ablation (repeatable)")
      ->check(CLI::IsMember(kAblations));
  sub->add_flag("--freeze-lookup-step1", f.freeze_lookup_step1,
                schema_help("train.freeze_lookup_step1"));
  sub->add_flag("--freeze-lookup-step2", f.freeze_lookup_step2,
                schema_help("train.freeze_lookup_step2"));
}

TrainConfig resolve_config(const ConfigFlags& f) {
  TrainConfig cfg = f.config_path.empty() ? TrainConfig{} : load_train_config(f.config_path);
  for (const auto& a : f.ablations) apply_ablation(cfg, a);
  for (const auto& s : f.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    set_config_value(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  for (const auto& [opt, key] : f.options)
    if (opt->count() > 0) set_config_value(cfg, key, f.values.at(key));
  if (f.freeze_lookup_step1) cfg.freeze_lookup_step1 = true;
  if (f.freeze_lookup_step2) cfg.freeze_lookup_step2 = true;
  cfg.validate();
  return cfg;
}

void print_kv(std::ostream& out, const std::string& key, const auto& value) {
  out << key << '=' << value << '\n';
}

// ---- subcommands ----

struct IngestArgs {
  std::string triples, out_dir = ".";
};

int cmd_ingest(const IngestArgs& a, Manifest& man, std::ostream& out) {
  auto kg = man.stage("load", [&] { return load_triples(a.triples); });
  man.input(a.triples);
  const auto dir = prepare_dir(a.out_dir);
  write_triples(kg, dir / "triples.tsv");
  for (const auto& [name, vocab] : {std::pair{"entities.txt", &kg.entities},
                                    std::pair{"relations.txt", &kg.relations}}) {
    std::ofstream f(dir / name);
    if (!f) throw IoError("cannot write " + (dir / name).string());
    for (const auto& form : vocab->forms()) f << form << '\n';
    man.output(dir / name);
  }
  man.output(dir / "triples.tsv");
  print_kv(out, "num_triples", kg.triples.size());
  print_kv(out, "num_entities", kg.entities.size());
  print_kv(out, "num_head_entities", kg.head_mentions().size());
  print_kv(out, "num_relations", kg.relations.size());
  man.write(dir);
  return kExitOk;
}

struct SideInfoArgs {
  std::string triples, out_dir = ".";
  double idf_e = TrainConfig{}.idf_threshold_e;
  double idf_r = TrainConfig{}.idf_threshold_r;
  std::vector<std::string> import_e, import_r;
  bool no_idf = false, no_morph = false;
};

int cmd_sideinfo(const SideInfoArgs& a, Manifest& man, std::ostream& out) {
  auto kg = load_triples(a.triples);
  man.input(a.triples);
  auto build = [&](const Vocabulary& vocab, double threshold, const std::vector<std::string>& imports,
                   const std::string& ns) {
    std::vector<SideInfoPairs> parts;
    if (!a.no_idf) parts.push_back(idf_overlap_pairs(vocab, threshold));
    if (!a.no_morph) parts.push_back(morph_pairs(vocab));
    for (const auto& path : imports) {
      auto imp = load_imported_clusters(path, vocab);
      man.input(path);
      parts.push_back(score_imported_clusters(imp.clusters, imp.source));
      print_kv(out, ns + "_unknown_imported_mentions", imp.unknown_mentions);
    }
    return merge_pairs(parts);
  };
  const auto dir = prepare_dir(a.out_dir);
  auto pe = man.stage("entities", [&] { return build(kg.entities, a.idf_e, a.import_e, "entity"); });
  auto pr = man.stage("relations", [&] { return build(kg.relations, a.idf_r, a.import_r, "relation"); });
  write_pairs(pe, kg.entities, dir / "entity_sideinfo.tsv");
  write_pairs(pr, kg.relations, dir / "relation_sideinfo.tsv");
  man.output(dir / "entity_sideinfo.tsv");
  man.output(dir / "relation_sideinfo.tsv");
  print_kv(out, "entity_pairs", pe.size());
  print_kv(out, "relation_pairs", pr.size());
  man.write(dir);
  return kExitOk;
}

struct ModelArgs {
  std::string triples, wordvecs, out_dir = ".";
  std::string sideinfo, sideinfo_rel, init_checkpoint;
  bool no_sideinfo = false, verbose = false;
  ConfigFlags flags;
};

void write_cluster_files(const ClusterPair& c, const OpenKG& kg, const fs::path& dir,
                         const std::string& prefix, Manifest& man) {
  write_clusters(c.entities, kg.entities, dir / (prefix + "entity_clusters.txt"));
  write_clusters(c.relations, kg.relations, dir / (prefix + "relation_clusters.txt"));
  man.output(dir / (prefix + "entity_clusters.txt"));
  man.output(dir / (prefix + "relation_clusters.txt"));
}

int cmd_init(const ModelArgs& a, Manifest& man, std::ostream& out) {
  const auto cfg = resolve_config(a.flags);
  auto kg = load_triples(a.triples);
  man.input(a.triples);
  auto wv = man.stage("word_vectors", [&] { return load_word_vectors(a.wordvecs); });
  man.input(a.wordvecs);
  auto m = man.stage("initialize", [&] { return initialize_model(kg, wv, cfg); });
  const auto dir = prepare_dir(a.out_dir);
  save_checkpoint(m, dir / "init.ckpt");
  man.output(dir / "init.ckpt");
  write_cluster_files({m.init.entities, m.init.relations}, kg, dir, "init_", man);
  man.set("config", to_config_text(cfg));
  man.set("seed", cfg.seed);
  print_kv(out, "entity_clusters", m.init.entities.num_clusters());
  print_kv(out, "relation_clusters", m.init.relations.num_clusters());
  man.write(dir);
  return kExitOk;
}

int cmd_train(const ModelArgs& a, Manifest& man, std::ostream& out, std::ostream& err) {
  const auto cfg = resolve_config(a.flags);
  auto kg = load_triples(a.triples);
  man.input(a.triples);

  Model m;
  if (!a.init_checkpoint.empty()) {
    m = load_checkpoint(a.init_checkpoint);
    man.input(a.init_checkpoint);
    // Initialisation and architecture come from the checkpoint.
    const auto kept = m.cfg;
    m.cfg = cfg;
    m.cfg.theta_e = kept.theta_e;
    m.cfg.theta_r = kept.theta_r;
    m.cfg.init = kept.init;
    m.cfg.kmeans_k_e = kept.kmeans_k_e;
    m.cfg.kmeans_k_r = kept.kmeans_k_r;
    m.cfg.embed_mode = kept.embed_mode;
    m.cfg.var_floor = kept.var_floor;
    m.cfg.input_dim = kept.input_dim;
    m.cfg.hidden = kept.hidden;
    m.cfg.latent_dim = kept.latent_dim;
    m.cfg.no_hidden_layer = kept.no_hidden_layer;
    if (m.init.entities.size() != kg.entities.size() ||
        m.init.relations.size() != kg.relations.size())
      throw DimensionError("checkpoint vocabulary does not match " + a.triples);
  } else {
    if (a.wordvecs.empty()) throw ConfigError("train needs --wordvecs or --init-checkpoint");
    auto wv = man.stage("word_vectors", [&] { return load_word_vectors(a.wordvecs); });
    man.input(a.wordvecs);
    m = man.stage("initialize", [&] { return initialize_model(kg, wv, cfg); });
  }

  SideInfo si;
  if (!a.sideinfo.empty()) {
    si.entities = load_pairs(a.sideinfo, kg.entities);
    man.input(a.sideinfo);
  }
  if (!a.sideinfo_rel.empty()) {
    si.relations = load_pairs(a.sideinfo_rel, kg.relations);
    man.input(a.sideinfo_rel);
  }
  if (a.sideinfo.empty() && a.sideinfo_rel.empty() && !a.no_sideinfo)
    si = man.stage("side_info", [&] { return generate_side_info(kg, m.cfg); });

  ProgressFn progress;
  if (a.verbose)
    progress = [&err](const EpochStats& s) {
      err << "step=" << s.step << " epoch=" << s.epoch << " loss=" << s.loss << '\n';
    };
  auto rng = derive_rng(m.cfg.seed, 7);
  man.stage("step1", [&] { train_step1(m, kg, si, rng, progress); });
  man.stage("step2", [&] { train_step2(m, kg, si, rng, progress); });
  auto pred = man.stage("inference", [&] { return predict(m); });

  const auto dir = prepare_dir(a.out_dir);
  save_checkpoint(m, dir / "model.ckpt");
  man.output(dir / "model.ckpt");
  write_cluster_files(pred, kg, dir, "", man);
  man.set("config", to_config_text(m.cfg));
  man.set("seed", m.cfg.seed);
  print_kv(out, "entity_clusters", pred.entities.num_clusters());
  print_kv(out, "relation_clusters", pred.relations.num_clusters());
  man.write(dir);
  return kExitOk;
}

struct ClusterArgs {
  std::string checkpoint, triples, out_dir = ".";
  bool pipeline = false;
};

int cmd_cluster(const ClusterArgs& a, Manifest& man, std::ostream& out) {
  auto m = load_checkpoint(a.checkpoint);
  man.input(a.checkpoint);
  auto kg = load_triples(a.triples);
  man.input(a.triples);
  if (m.init.entities.size() != kg.entities.size() || m.init.relations.size() != kg.relations.size())
    throw DimensionError("checkpoint vocabulary does not match " + a.triples);
  if (a.pipeline) m.cfg.pipeline_vae_hac = true;
  auto pred = man.stage("inference", [&] { return predict(m); });
  const auto dir = prepare_dir(a.out_dir);
  write_cluster_files(pred, kg, dir, "", man);
  print_kv(out, "entity_clusters", pred.entities.num_clusters());
  print_kv(out, "relation_clusters", pred.relations.num_clusters());
  man.write(dir);
  return kExitOk;
}

struct EvalArgs {
  std::string pred, gold, triples, universe = "gold", ns = "entity", metrics_out, prefix;
  bool kv = false;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const Namespace ns = a.ns == "entity" ? Namespace::kEntity : Namespace::kRelation;
  const auto gold_lines = read_lines(a.gold);
  const auto pred_lines = read_lines(a.pred);
  Vocabulary vocab;
  std::optional<OpenKG> kg;
  if (!a.triples.empty()) {
    kg = load_triples(a.triples);
    vocab = ns == Namespace::kEntity ? kg->entities : kg->relations;
  } else {
    if (a.universe != "gold") throw ConfigError("--universe " + a.universe + " needs --triples");
    for (const auto* lines : {&gold_lines, &pred_lines})
      for (const auto& l : *lines)
        for (const auto& f : split_tabs(l))
          if (!f.empty()) vocab.add(f);
  }
  const auto gold = parse_clusters(gold_lines, vocab, ns, a.gold);
  const auto pred = parse_clusters(pred_lines, vocab, ns, a.pred);

  std::vector<MentionId> universe;
  if (a.universe == "gold") {
    std::set<MentionId> listed;
    for (const auto& l : gold_lines)
      for (const auto& f : split_tabs(l))
        if (!f.empty()) listed.insert(*vocab.find(f));
    universe.assign(listed.begin(), listed.end());
  } else if (a.universe == "head") {
    if (ns != Namespace::kEntity) throw ConfigError("--universe head applies to entities only");
    universe = kg->head_mentions();
  } else {
    universe.resize(vocab.size());
    std::iota(universe.begin(), universe.end(), MentionId{0});
  }
  const auto m = evaluate(pred, gold, universe);

  if (a.kv) {
    write_metrics(out, m, a.prefix);
  } else {
    const char* names[] = {"macro_p", "macro_r", "macro_f1", "micro_p", "micro_r",
                           "micro_f1", "pair_p", "pair_r", "pair_f1", "mean_f1"};
    const double values[] = {m.macro_p, m.macro_r, m.macro_f1, m.micro_p, m.micro_r,
                             m.micro_f1, m.pair_p, m.pair_r, m.pair_f1, m.mean_f1};
    char buf[32];
    for (auto* n : names) {
      std::snprintf(buf, sizeof buf, "%-9s", n);
      out << buf;
    }
    out << '\n';
    for (double v : values) {
      std::snprintf(buf, sizeof buf, "%-9.4f", v);
      out << buf;
    }
    out << '\n';
  }
  if (!a.metrics_out.empty()) {
    std::ofstream f(a.metrics_out);
    if (!f) throw IoError("cannot write " + a.metrics_out);
    write_metrics(f, m, a.prefix);
  }
  return kExitOk;
}

struct GenArgs {
  SynthConfig cfg;
  std::string out_dir = ".";
};

int cmd_gen_synth(const GenArgs& a, Manifest& man, std::ostream& out) {
  auto ds = man.stage("generate", [&] { return gen_synthetic(a.cfg); });
  const auto dir = prepare_dir(a.out_dir);
  write_triples(ds.kg, dir / "triples.tsv");
  write_clusters(ds.gold_entities, ds.kg.entities, dir / "gold_entities.txt");
  write_clusters(ds.gold_relations, ds.kg.relations, dir / "gold_relations.txt");
  write_word_vectors(ds.word_vectors, ds.tokens, dir / "wordvecs.txt");
  write_pairs(ds.oracle_entity_pairs, ds.kg.entities, dir / "oracle_entity_sideinfo.tsv");
  write_pairs(ds.oracle_relation_pairs, ds.kg.relations, dir / "oracle_relation_sideinfo.tsv");
  for (const auto* n : {"triples.tsv", "gold_entities.txt", "gold_relations.txt", "wordvecs.txt",
                        "oracle_entity_sideinfo.tsv", "oracle_relation_sideinfo.tsv"})
    man.output(dir / n);
  man.set("seed", a.cfg.seed);
  print_kv(out, "num_triples", ds.kg.triples.size());
  print_kv(out, "num_entities", ds.kg.entities.size());
  print_kv(out, "num_relations", ds.kg.relations.size());
  man.write(dir);
  return kExitOk;
}

struct GoldArgs {
  std::string pairs, out, triples, retained_out;
  double threshold = 0.25;
};

int cmd_build_gold(const GoldArgs& a, std::ostream& out) {
  if (!a.retained_out.empty() && a.triples.empty())
    throw ConfigError("--retained-out needs --triples");
  const auto pairs = load_scored_pairs(a.pairs);
  std::optional<OpenKG> kg;
  if (!a.triples.empty()) kg = load_triples(a.triples);
  const auto gold = build_gold(pairs, a.threshold, kg ? &*kg : nullptr);
  write_gold_clusters(gold.clusters, a.out);
  if (!a.retained_out.empty()) write_triples(*gold.retained, a.retained_out);
  std::size_t mentions = 0;
  for (const auto& c : gold.clusters) mentions += c.size();
  print_kv(out, "gold_clusters", gold.clusters.size());
  print_kv(out, "gold_mentions", mentions);
  if (gold.retained) print_kv(out, "retained_triples", gold.retained->triples.size());
  return kExitOk;
}

struct SplitArgs {
  std::string triples, out_dir = ".";
  double ratio = 0.8;
  std::uint64_t seed = TrainConfig{}.seed;
};

int cmd_split(const SplitArgs& a, Manifest& man, std::ostream& out) {
  auto kg = load_triples(a.triples);
  man.input(a.triples);
  auto parts = split_triples(kg.triples, a.ratio, a.seed);
  const auto dir = prepare_dir(a.out_dir);
  OpenKG first = kg, second = kg;
  first.triples = parts.first;
  second.triples = parts.second;
  write_triples(first, dir / "first.tsv");
  write_triples(second, dir / "second.tsv");
  man.output(dir / "first.tsv");
  man.output(dir / "second.tsv");
  man.set("seed", a.seed);
  print_kv(out, "first_triples", parts.first.size());
  print_kv(out, "second_triples", parts.second.size());
  man.write(dir);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Open KG canonicalization with twin Gaussian-mixture VAEs", "okgc"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  const std::string out_dir_help = "output directory";

  IngestArgs ingest;
  auto* s_ingest = app.add_subcommand("ingest", "load and validate a triples TSV; write vocabularies");
  s_ingest->add_option("--triples", ingest.triples, "head<TAB>relation<TAB>tail file")->required();
  s_ingest->add_option("--out-dir", ingest.out_dir, out_dir_help)->capture_default_str();

  SideInfoArgs si;
  auto* s_si = app.add_subcommand("sideinfo", "generate weighted side-information pairs");
  s_si->add_option("--triples", si.triples, "triples TSV")->required();
  s_si->add_option("--out-dir", si.out_dir, out_dir_help)->capture_default_str();
  s_si->add_option("--idf-threshold-e", si.idf_e, "IDF overlap cut for entities")
      ->capture_default_str()->check(CLI::Range(0.0, 1.0));
  s_si->add_option("--idf-threshold-r", si.idf_r, "IDF overlap cut for relations")
      ->capture_default_str()->check(CLI::Range(0.0, 1.0));
  s_si->add_option("--import-e", si.import_e, "imported entity clusters file (repeatable)");
  s_si->add_option("--import-r", si.import_r, "imported relation clusters file (repeatable)");
  s_si->add_flag("--no-idf", si.no_idf, "skip IDF token overlap");
  s_si->add_flag("--no-morph", si.no_morph, "skip morphological normalisation");

  ModelArgs init;
  auto* s_init = app.add_subcommand("init", "initialise the mixtures and write a checkpoint");
  s_init->add_option("--triples", init.triples, "triples TSV")->required();
  s_init->add_option("--wordvecs", init.wordvecs, "word vectors (token v1 ... vd)")->required();
  s_init->add_option("--out-dir", init.out_dir, out_dir_help)->capture_default_str();
  add_config_flags(s_init, init.flags);

  ModelArgs train;
  auto* s_train = app.add_subcommand("train", "initialise, train both steps and cluster");
  s_train->add_option("--triples", train.triples, "triples TSV")->required();
  s_train->add_option("--wordvecs", train.wordvecs, "word vectors (token v1 ... vd)");
  s_train->add_option("--init-checkpoint", train.init_checkpoint,
                      "start from an init checkpoint instead of --wordvecs");
  s_train->add_option("--sideinfo", train.sideinfo, "entity side-information pairs");
  s_train->add_option("--sideinfo-rel", train.sideinfo_rel, "relation side-information pairs");
  s_train->add_flag("--no-sideinfo", train.no_sideinfo,
                    "do not generate side information when no pairs file is given");
  s_train->add_option("--out-dir", train.out_dir, out_dir_help)->capture_default_str();
  s_train->add_flag("-v,--verbose", train.verbose, "per-epoch loss on stderr");
  add_config_flags(s_train, train.flags);

  ClusterArgs cl;
  auto* s_cluster = app.add_subcommand("cluster", "winners-take-all clustering from a checkpoint");
  s_cluster->add_option("--checkpoint", cl.checkpoint, "model checkpoint")->required();
  s_cluster->add_option("--triples", cl.triples, "triples TSV the model was trained on")->required();
  s_cluster->add_option("--out-dir", cl.out_dir, out_dir_help)->capture_default_str();
  s_cluster->add_flag("--pipeline", cl.pipeline, "HAC over encoder means instead of the mixture");

  EvalArgs ev;
  auto* s_eval = app.add_subcommand("eval", "macro, micro and pair precision/recall/F1");
  s_eval->add_option("--pred", ev.pred, "predicted clusters file")->required();
  s_eval->add_option("--gold", ev.gold, "gold clusters file")->required();
  s_eval->add_option("--triples", ev.triples, "triples TSV defining the vocabulary");
  s_eval->add_option("--universe", ev.universe, "mentions scored: gold-listed, head mentions, all")
      ->capture_default_str()->check(CLI::IsMember({"gold", "head", "all"}));
  s_eval->add_option("--namespace", ev.ns, "entity or relation")
      ->capture_default_str()->check(CLI::IsMember({"entity", "relation"}));
  s_eval->add_flag("--kv", ev.kv, "name=value lines instead of the table");
  s_eval->add_option("--prefix", ev.prefix, "prefix for name=value keys");
  s_eval->add_option("--metrics-out", ev.metrics_out, "also write name=value lines to this file");

  GenArgs gen;
  auto* s_gen = app.add_subcommand("gen-synth", "generate a synthetic Open KG with gold clusters");
  s_gen->add_option("--out-dir", gen.out_dir, out_dir_help)->capture_default_str();
  s_gen->add_option("--seed", gen.cfg.seed, "random seed")->capture_default_str();
  s_gen->add_option("--num-entities", gen.cfg.num_entities, "latent entities")->capture_default_str();
  s_gen->add_option("--forms", gen.cfg.surface_forms_per_entity, "surface forms per entity")
      ->capture_default_str();
  s_gen->add_option("--num-relations", gen.cfg.num_relations, "latent relations")->capture_default_str();
  s_gen->add_option("--paraphrases", gen.cfg.paraphrases_per_relation, "paraphrases per relation")
      ->capture_default_str();
  s_gen->add_option("--num-triples", gen.cfg.num_triples, "triples")->capture_default_str();
  s_gen->add_option("--noise", gen.cfg.token_noise_prob, "noise-token probability")
      ->capture_default_str()->check(CLI::Range(0.0, 1.0));
  s_gen->add_option("--word-dim", gen.cfg.word_dim, "word-vector dimension")->capture_default_str();

  GoldArgs gold;
  auto* s_gold = app.add_subcommand("build-gold", "gold clusters from soft-truth scored pairs");
  s_gold->add_option("--pairs", gold.pairs, "a<TAB>b<TAB>soft_truth file")->required();
  s_gold->add_option("--threshold", gold.threshold, "minimum soft truth kept")->capture_default_str();
  s_gold->add_option("--out", gold.out, "gold clusters output file")->required();
  s_gold->add_option("--triples", gold.triples, "triples to filter to gold mentions");
  s_gold->add_option("--retained-out", gold.retained_out, "output for the retained triples");

  SplitArgs split;
  auto* s_split = app.add_subcommand("split", "seeded split of a triples file");
  s_split->add_option("--triples", split.triples, "triples TSV")->required();
  s_split->add_option("--ratio", split.ratio, "fraction going to first.tsv")
      ->capture_default_str()->check(CLI::Range(0.0, 1.0));
  s_split->add_option("--seed", split.seed, "random seed")->capture_default_str();
  s_split->add_option("--out-dir", split.out_dir, out_dir_help)->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\nRun with --help for more information.\n";
    return kExitUsage;
  }

  const auto* sub = app.get_subcommands().front();
  Manifest man(sub->get_name(), args);
  try {
    if (sub == s_ingest) return cmd_ingest(ingest, man, out);
    if (sub == s_si) return cmd_sideinfo(si, man, out);
    if (sub == s_init) return cmd_init(init, man, out);
    if (sub == s_train) return cmd_train(train, man, out, err);
    if (sub == s_cluster) return cmd_cluster(cl, man, out);
    if (sub == s_eval) return cmd_eval(ev, out);
    if (sub == s_gen) {
      gen.cfg.validate();
      return cmd_gen_synth(gen, man, out);
    }
    if (sub == s_gold) return cmd_build_gold(gold, out);
    if (sub == s_split) return cmd_split(split, man, out);
  } catch (const ConfigError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IoError& e) {
    err << "io error: " << e.what() << '\n';
    return kExitFailure;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kExitFailure;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace okgc
