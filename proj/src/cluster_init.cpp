#include "okgc/cluster_init.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <random>
#include <thread>
#include <tuple>

#include "okgc/errors.hpp"

namespace okgc {

void GaussianMixture::validate() const {
  const auto k = means.rows();
  if (k < 1) throw ContractError("mixture needs at least one component");
  if (pi.size() != k || log_vars.rows() != k || log_vars.cols() != means.cols())
    throw DimensionError("mixture parameter shapes disagree");
  if ((pi.array() <= 0.0).any()) throw ContractError("mixture weights must be positive");
  if (std::abs(pi.sum() - 1.0) > 1e-9) throw ContractError("mixture weights must sum to 1");
  if (!log_vars.allFinite() || (log_vars.array() < kMinLogVar).any() ||
      (log_vars.array() > kMaxLogVar).any())
    throw ContractError("mixture log-variances outside [-10, 10]");
}

double cosine_distance(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return (na == 0.0 && nb == 0.0) ? 0.0 : 1.0;
  const double d = 1.0 - a.dot(b) / (na * nb);
  return std::clamp(d, 0.0, 2.0);
}

namespace {

// Upper-triangular pairwise distance storage.
class CondensedDistances {
 public:
  explicit CondensedDistances(std::size_t n) : n_(n), data_(n < 2 ? 0 : n * (n - 1) / 2) {}

  double& at(std::size_t i, std::size_t j) {
    if (i > j) std::swap(i, j);
    return data_[index(i, j)];
  }
  double at(std::size_t i, std::size_t j) const {
    if (i > j) std::swap(i, j);
    return data_[index(i, j)];
  }

 private:
  std::size_t index(std::size_t i, std::size_t j) const {
    return i * n_ - i * (i + 1) / 2 + (j - i - 1);
  }
  std::size_t n_;
  std::vector<double> data_;
};

CondensedDistances pairwise_cosine(const Matrix& points, unsigned threads) {
  const auto n = static_cast<std::size_t>(points.rows());
  CondensedDistances dist(n);
  Vector norms = points.rowwise().norm();
  auto fill_rows = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < n; i += stride) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double na = norms[static_cast<Eigen::Index>(i)];
        const double nb = norms[static_cast<Eigen::Index>(j)];
        double d;
        if (na == 0.0 || nb == 0.0) {
          d = (na == 0.0 && nb == 0.0) ? 0.0 : 1.0;
        } else {
          d = 1.0 - points.row(static_cast<Eigen::Index>(i)).dot(points.row(static_cast<Eigen::Index>(j))) /
                        (na * nb);
          d = std::clamp(d, 0.0, 2.0);
        }
        dist.at(i, j) = d;
      }
    }
  };
  // Each entry is written by exactly one thread, so results do not depend on
  // the thread count.
  threads = std::max(1u, threads);
  if (threads == 1 || n < 256) {
    fill_rows(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(fill_rows, t, threads);
    for (auto& th : pool) th.join();
  }
  return dist;
}

}  // namespace

Clustering hac_cluster(const Matrix& points, const HacConfig& cfg, Namespace ns) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (n == 0) throw ContractError("hac_cluster needs at least one point");
  if (cfg.threshold < 0.0) throw ConfigError("HAC threshold must be non-negative");
  if (cfg.threshold == 0.0) return Clustering::singletons(n, ns);

  auto dist = pairwise_cosine(points, cfg.threads);
  constexpr auto kNone = std::numeric_limits<std::size_t>::max();
  const double inf = std::numeric_limits<double>::infinity();

  // Cluster index == smallest member id, so (a, b) ordering is the tie-break.
  std::vector<char> active(n, 1);
  std::vector<std::size_t> nn(n, kNone);
  std::vector<double> nn_dist(n, inf);
  std::vector<std::size_t> rep(n);
  for (std::size_t i = 0; i < n; ++i) rep[i] = i;
  std::vector<std::vector<std::size_t>> members(n);
  for (std::size_t i = 0; i < n; ++i) members[i] = {i};

  using Entry = std::tuple<double, std::size_t, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;

  auto refresh = [&](std::size_t a) {
    nn[a] = kNone;
    nn_dist[a] = inf;
    for (std::size_t b = a + 1; b < n; ++b) {
      if (!active[b]) continue;
      const double d = dist.at(a, b);
      if (d < nn_dist[a]) {
        nn_dist[a] = d;
        nn[a] = b;
      }
    }
    if (nn[a] != kNone) heap.emplace(nn_dist[a], a, nn[a]);
  };
  for (std::size_t a = 0; a < n; ++a) refresh(a);

  while (!heap.empty()) {
    auto [d, a, b] = heap.top();
    if (!active[a] || !active[b] || nn[a] != b || nn_dist[a] != d) {
      heap.pop();
      continue;
    }
    if (d > cfg.threshold) break;
    heap.pop();

    active[b] = 0;
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == a) continue;
      dist.at(a, k) = std::max(dist.at(a, k), dist.at(b, k));
    }
    for (auto m : members[b]) rep[m] = a;
    members[a].insert(members[a].end(), members[b].begin(), members[b].end());
    members[b].clear();

    refresh(a);
    for (std::size_t k = 0; k < b; ++k) {
      if (!active[k] || k == a) continue;
      if (nn[k] == a || nn[k] == b) refresh(k);
    }
  }

  std::vector<std::int64_t> raw(rep.begin(), rep.end());
  return Clustering::from_labels(raw, ns);
}

Clustering kmeans_cluster(const Matrix& points, std::size_t k, std::uint64_t seed,
                          std::size_t max_iters, Namespace ns) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (k == 0 || k > n)
    throw ContractError("kmeans needs 1 <= K <= n (K=" + std::to_string(k) +
                        ", n=" + std::to_string(n) + ")");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  // k-means++ seeding.
  std::vector<std::size_t> chosen;
  chosen.push_back(static_cast<std::size_t>(uni(rng) * static_cast<double>(n)) % n);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::vector<char> taken(n, 0);
  taken[chosen[0]] = 1;
  while (chosen.size() < k) {
    const auto last = points.row(static_cast<Eigen::Index>(chosen.back()));
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], (points.row(static_cast<Eigen::Index>(i)) - last).squaredNorm());
      if (!taken[i]) total += d2[i];
    }
    std::size_t pick = n;
    if (total > 0.0) {
      double u = uni(rng) * total;
      for (std::size_t i = 0; i < n; ++i) {
        if (taken[i]) continue;
        u -= d2[i];
        if (u <= 0.0) {
          pick = i;
          break;
        }
      }
    }
    if (pick == n)
      for (std::size_t i = 0; i < n && pick == n; ++i)
        if (!taken[i]) pick = i;
    taken[pick] = 1;
    chosen.push_back(pick);
  }

  Matrix centers(static_cast<Eigen::Index>(k), points.cols());
  for (std::size_t c = 0; c < k; ++c)
    centers.row(static_cast<Eigen::Index>(c)) = points.row(static_cast<Eigen::Index>(chosen[c]));

  std::vector<std::int64_t> assign(n, -1);
  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      std::int64_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = (points.row(static_cast<Eigen::Index>(i)) -
                          centers.row(static_cast<Eigen::Index>(c)))
                             .squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = static_cast<std::int64_t>(c);
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    if (!changed) break;
    Matrix sums = Matrix::Zero(static_cast<Eigen::Index>(k), points.cols());
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums.row(assign[i]) += points.row(static_cast<Eigen::Index>(i));
      ++counts[static_cast<std::size_t>(assign[i])];
    }
    for (std::size_t c = 0; c < k; ++c)
      if (counts[c] > 0)  // empty clusters keep their previous centre
        centers.row(static_cast<Eigen::Index>(c)) =
            sums.row(static_cast<Eigen::Index>(c)) / static_cast<double>(counts[c]);
  }
  return Clustering::from_labels(assign, ns);
}

GaussianMixture init_mixture(const Matrix& points, const Clustering& clustering,
                             double var_floor) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (clustering.size() != n) throw DimensionError("clustering does not cover the points");
  if (!(var_floor > 0.0)) throw ConfigError("var_floor must be positive");
  const auto k = static_cast<Eigen::Index>(clustering.num_clusters());
  const auto d = points.cols();

  GaussianMixture gm;
  gm.pi = Vector::Zero(k);
  gm.means = Matrix::Zero(k, d);
  gm.log_vars = Matrix::Zero(k, d);
  const auto groups = clustering.groups();
  for (Eigen::Index c = 0; c < k; ++c) {
    const auto& g = groups[static_cast<std::size_t>(c)];
    const double size = static_cast<double>(g.size());
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(d);
    for (auto i : g) mean += points.row(i);
    mean /= size;
    Eigen::RowVectorXd var = Eigen::RowVectorXd::Zero(d);
    for (auto i : g) var += (points.row(i) - mean).array().square().matrix();
    var /= size;
    gm.pi[c] = size / static_cast<double>(n);
    gm.means.row(c) = mean;
    gm.log_vars.row(c) = var.array().max(var_floor).log().min(kMaxLogVar).max(kMinLogVar).matrix();
  }
  return gm;
}

}  // namespace okgc
