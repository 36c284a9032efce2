#pragma once

#include <cstdint>

#include "okgc/kg_core.hpp"
#include "okgc/linalg.hpp"

namespace okgc {

// Complete-linkage HAC with cosine distance, cut at `threshold`.
// A threshold of 0 performs no merges.
struct HacConfig {
  double threshold = 0.4;
  unsigned threads = 1;
};

// Diagonal-covariance mixture. log_vars are kept within [kMinLogVar, kMaxLogVar].
struct GaussianMixture {
  Vector pi;
  Matrix means;
  Matrix log_vars;

  std::size_t num_components() const { return static_cast<std::size_t>(means.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(means.cols()); }
  // Throws ContractError when the invariants do not hold.
  void validate() const;
};

inline constexpr double kMinLogVar = -10.0;
inline constexpr double kMaxLogVar = 10.0;
inline constexpr double kDefaultVarFloor = 1e-4;

// 1 - cos(a, b); zero vectors are at distance 1 from non-zero vectors and 0
// from each other.
double cosine_distance(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b);

// Merges the closest pair (ties broken by the smallest member ids of the two
// clusters) while the complete-linkage distance is <= threshold.
Clustering hac_cluster(const Matrix& points, const HacConfig& cfg,
                       Namespace ns = Namespace::kEntity);

// Lloyd iterations from k-means++ seeding; Euclidean distance.
Clustering kmeans_cluster(const Matrix& points, std::size_t k, std::uint64_t seed,
                          std::size_t max_iters = 100, Namespace ns = Namespace::kEntity);

// Within-cluster means and population variances (floored at var_floor);
// weights proportional to cluster size.
GaussianMixture init_mixture(const Matrix& points, const Clustering& clustering,
                             double var_floor = kDefaultVarFloor);

}  // namespace okgc
