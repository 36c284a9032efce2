#pragma once

// Training configuration and its sectioned key = value file format.
//
//   # comment
//   [section]
//   key = value
//
// Keys are addressed as "section.key". Unknown sections or keys, repeated
// keys and malformed values raise ConfigError.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "okgc/kge.hpp"
#include "okgc/phrase_embed.hpp"

namespace okgc {

enum class InitMethod { kHac, kKmeans };
InitMethod parse_init_method(std::string_view s);
std::string_view to_string(InitMethod m);

struct TrainConfig {
  // [init]
  double theta_e = 0.4;
  double theta_r = 0.37;
  InitMethod init = InitMethod::kHac;
  std::size_t kmeans_k_e = 0;  // 0: use the HAC cluster count at theta_e
  std::size_t kmeans_k_r = 0;
  EmbedMode embed_mode = EmbedMode::kNormalized;
  double var_floor = 1e-4;

  // [model]
  std::size_t input_dim = 768;
  std::vector<std::size_t> hidden = {768, 384};
  std::size_t latent_dim = 100;
  bool no_hidden_layer = false;  // drops the last hidden layer

  // [train]
  std::size_t epochs_step1 = 50;
  std::size_t epochs_step2 = 300;
  double lr_step1 = 1e-3;
  double lr_step2 = 1e-4;
  std::size_t batch_size = 50;
  std::size_t eval_batch_size = 5;
  double l1_lambda = 1e-3;
  bool freeze_lookup_step1 = false;
  bool freeze_lookup_step2 = false;
  std::uint64_t seed = 55;
  unsigned threads = 1;

  // [kge]
  double tau = 1e5;
  std::size_t num_negatives = 20;
  KgeLossKind kge_loss = KgeLossKind::kBce;
  bool no_kge = false;

  // [side_info]
  double idf_threshold_e = 0.4;
  double idf_threshold_r = 0.9;

  // [inference]
  bool pipeline_vae_hac = false;

  // Hidden widths after applying no_hidden_layer.
  std::vector<std::size_t> effective_hidden() const;
  void validate() const;
};

// Sets "section.key" from its textual value.
void set_config_value(TrainConfig& cfg, std::string_view key, std::string_view value);

TrainConfig parse_train_config(std::string_view text, const std::string& origin = "<memory>");
TrainConfig load_train_config(const std::filesystem::path& path);

// Canonical text form; parse_train_config(to_config_text(c)) == c.
std::string to_config_text(const TrainConfig& cfg);

// Every "section.key" with a one-line description and its default.
std::vector<std::pair<std::string, std::string>> config_schema();

// Applies a named ablation: no-kge, no-hidden-layer, pipeline-vae-hac,
// kmeans-init, transe, margin, unnormalized.
void apply_ablation(TrainConfig& cfg, std::string_view name);

bool operator==(const TrainConfig& a, const TrainConfig& b);

}  // namespace okgc
