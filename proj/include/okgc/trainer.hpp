#pragma once

// Gaussian initialisation, the two training steps and winners-take-all
// inference for the entity and relation VAEs.
//
// Step 1 trains both encoders (and the lookup tables unless frozen) against
// the initial clustering used as weak labels. Step 2 freezes the encoders and
// trains decoders, mixtures and lookup tables on ELBO + KGE + side info.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "okgc/config.hpp"
#include "okgc/kg_core.hpp"
#include "okgc/phrase_embed.hpp"
#include "okgc/side_info.hpp"
#include "okgc/vade.hpp"

namespace okgc {

inline constexpr const char* kEntityLookup = "lookup/entity";
inline constexpr const char* kRelationLookup = "lookup/relation";

struct WeakLabels {
  Clustering entities;
  Clustering relations;
};

struct Model {
  TrainConfig cfg;
  Vae entity;
  Vae relation;
  ad::ParamStore store;
  WeakLabels init;

  std::vector<std::string> lookup_params() const { return {kEntityLookup, kRelationLookup}; }
};

struct ClusterPair {
  Clustering entities;
  Clustering relations;
};

// Independent RNG stream `stream` derived from `seed`.
std::mt19937_64 derive_rng(std::uint64_t seed, std::uint64_t stream);

// Clusters the rows (HAC at theta, or k-means) for one namespace.
Clustering initial_clustering(const Matrix& points, double theta, const TrainConfig& cfg,
                              std::size_t kmeans_k, Namespace ns);

// Builds the mixture in the latent space. Points whose width differs from
// latent_dim are first mapped by a seeded Gaussian random projection.
GaussianMixture latent_mixture(const Matrix& points, const Clustering& clustering,
                               const TrainConfig& cfg, std::uint64_t stream);

// Full stage-one initialisation from phrase embeddings of both vocabularies.
Model initialize_model(const Matrix& entity_points, const Matrix& relation_points,
                       const TrainConfig& cfg);
Model initialize_model(const OpenKG& kg, const WordVectors& wv, const TrainConfig& cfg);

struct EpochStats {
  int step = 0;  // 1 or 2
  std::size_t epoch = 0;
  double loss = 0.0;
};
using ProgressFn = std::function<void(const EpochStats&)>;

struct SideInfo {
  SideInfoPairs entities;
  SideInfoPairs relations;
};

// Step-1 loss on one batch (used by training and tests).
ad::Var step1_loss(const Model& m, const std::vector<Triple>& batch, const SideInfo& si,
                   std::mt19937_64& rng);
// Step-2 loss on one batch; negatives are drawn from `rng`.
ad::Var step2_loss(const Model& m, const std::vector<Triple>& batch, const SideInfo& si,
                   std::mt19937_64& rng);

// Both throw NumericError naming the epoch and batch on divergence.
void train_step1(Model& m, const OpenKG& kg, const SideInfo& si, std::mt19937_64& rng,
                 const ProgressFn& progress = {});
void train_step2(Model& m, const OpenKG& kg, const SideInfo& si, std::mt19937_64& rng,
                 const ProgressFn& progress = {});

// Winners-take-all over every mention, labels densified by first appearance.
ClusterPair infer_clusters(const Model& m);
// HAC (same thresholds) over the encoder means.
ClusterPair run_pipeline_ablation(const Model& m);
// infer_clusters or run_pipeline_ablation according to cfg.pipeline_vae_hac.
ClusterPair predict(const Model& m);

// Initialise, run both steps and predict.
ClusterPair run_pipeline(const OpenKG& kg, const WordVectors& wv, const SideInfo& si,
                         const TrainConfig& cfg, const ProgressFn& progress = {});

// Side information generated from the vocabularies (IDF + morphological).
SideInfo generate_side_info(const OpenKG& kg, const TrainConfig& cfg);

// Named tensors (raw little-endian doubles) followed by a JSON manifest with
// the configuration and the weak labels. Reload is bit-exact.
void save_checkpoint(const Model& m, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace okgc
