#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "pcdn/geometry.hpp"
#include "pcdn/kdtree.hpp"
#include "pcdn/network.hpp"

namespace pcdn {

// Gradient of the log of an isotropic Gaussian kernel density over `source`:
//   S(q) = sum_i w_i(q) (y_i - q) / h^2,  w = softmax_i(-|q - y_i|^2 / 2h^2)
// restricted to the max_neighbors nearest sources (0 = all of them).
class KdeScore {
 public:
  static constexpr std::size_t kDefaultNeighbors = 64;

  // With exclude_coincident set, source points lying exactly at the query are
  // left out of the sum. Evaluated at the source points themselves this is the
  // leave-one-out estimate; elsewhere it equals the plain KDE score.
  KdeScore(const PointCloud& source, double bandwidth,
           std::size_t max_neighbors = kDefaultNeighbors, bool exclude_coincident = false);

  Vec3 operator()(const Vec3& q) const;

  double bandwidth() const noexcept { return bandwidth_; }
  std::size_t max_neighbors() const noexcept { return max_neighbors_; }
  bool exclude_coincident() const noexcept { return exclude_coincident_; }
  const KdTree& index() const noexcept { return *index_; }

 private:
  std::shared_ptr<const KdTree> index_;
  double bandwidth_;
  std::size_t max_neighbors_;
  bool exclude_coincident_;
};

// Trained local network evaluated on the k_feat nearest source points of the
// query. The output is divided by feature_scale so it has units of 1/length.
inline constexpr std::size_t kNoSkip = static_cast<std::size_t>(-1);

// Network inputs for one query: offsets of its k_feat nearest sources divided
// by feature_scale. The source with index `skip` and any source lying exactly
// at the query are left out, so a cloud point never sees itself. When fewer
// than k_feat sources remain the last offset is repeated, which leaves the
// max-pooled features unchanged.
void gather_network_inputs(const KdTree& index, const Vec3& query, std::size_t k_feat,
                           double feature_scale, std::size_t skip, std::span<Vec3> out);

class NetworkScore {
 public:
  NetworkScore(NetworkWeights weights, const PointCloud& source, std::size_t k_feat,
               double feature_scale);

  Vec3 operator()(const Vec3& q) const;

  const NetworkWeights& weights() const noexcept { return *weights_; }
  std::size_t k_feat() const noexcept { return k_feat_; }
  double feature_scale() const noexcept { return feature_scale_; }
  const KdTree& index() const noexcept { return *index_; }

 private:
  std::shared_ptr<const NetworkWeights> weights_;
  std::shared_ptr<const KdTree> index_;
  std::size_t k_feat_;
  double feature_scale_;
};

enum class ScoreBackend { kde, network };

std::string to_string(ScoreBackend backend);

// Estimated score S(y) = grad_y log p(y). Evaluation is pure; copies share
// their immutable state, so a field can be used from many threads.
class ScoreField {
 public:
  explicit ScoreField(KdeScore kde) : impl_(std::move(kde)) {}
  explicit ScoreField(NetworkScore net) : impl_(std::move(net)) {}

  static ScoreField kde(const PointCloud& source, double bandwidth,
                        std::size_t max_neighbors = KdeScore::kDefaultNeighbors,
                        bool exclude_coincident = false) {
    return ScoreField(KdeScore(source, bandwidth, max_neighbors, exclude_coincident));
  }
  // Exact score of the Gaussian mixture centered on `centers` with std sigma.
  static ScoreField gaussian_mixture(const PointCloud& centers, double sigma) {
    return ScoreField(KdeScore(centers, sigma, 0));
  }

  ScoreBackend backend() const noexcept {
    return std::holds_alternative<KdeScore>(impl_) ? ScoreBackend::kde : ScoreBackend::network;
  }

  // Variance of the smoothing kernel the estimate carries on top of the
  // data distribution: h^2 for the KDE backend, 0 for the network.
  double kernel_variance() const noexcept;

  Vec3 evaluate(const Vec3& q) const;
  std::vector<Vec3> evaluate(std::span<const Vec3> queries) const;

  const KdeScore* as_kde() const noexcept { return std::get_if<KdeScore>(&impl_); }
  const NetworkScore* as_network() const noexcept { return std::get_if<NetworkScore>(&impl_); }

 private:
  std::variant<KdeScore, NetworkScore> impl_;
};

inline ScoreField kde_score(const PointCloud& cloud, double bandwidth) {
  return ScoreField::kde(cloud, bandwidth);
}

// One score per query, in query order.
std::vector<Vec3> evaluate_score(const ScoreField& field, const PointCloud& queries);

// (1/N) sum_i |sigma_t S_i + u_i|^2.
double ar_dae_loss(std::span<const Vec3> predicted_scores, std::span<const Vec3> u,
                   double sigma_t);

// Median over points of the mean distance to their k nearest other points.
double median_knn_distance(const PointCloud& cloud, std::size_t k);

}  // namespace pcdn
