#include "pcdn/score.hpp"

#include <algorithm>
#include <cmath>

#include "pcdn/error.hpp"
#include "pcdn/parallel.hpp"

namespace pcdn {

KdeScore::KdeScore(const PointCloud& source, double bandwidth, std::size_t max_neighbors,
                   bool exclude_coincident)
    : index_(std::make_shared<KdTree>(source)),
      bandwidth_(bandwidth),
      max_neighbors_(max_neighbors),
      exclude_coincident_(exclude_coincident) {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth))
    throw InvalidInput("KDE bandwidth must be positive and finite");
}

Vec3 KdeScore::operator()(const Vec3& q) const {
  const std::size_t k = max_neighbors_ == 0 ? index_->size() : max_neighbors_;
  thread_local std::vector<Neighbor> nbrs;
  if (!exclude_coincident_) {
    index_->knn(q, k, nbrs);
  } else {
    // Coincident sources sort first; over-fetch by one and drop them.
    index_->knn(q, std::min(k + 1, index_->size()), nbrs);
    const auto first_kept = std::find_if(nbrs.begin(), nbrs.end(),
                                         [](const Neighbor& n) { return n.sq_distance > 0.0; });
    nbrs.erase(nbrs.begin(), first_kept);
    if (nbrs.size() > k) nbrs.resize(k);
    if (nbrs.empty()) return Vec3{};
  }
  const double inv_two_h2 = 1.0 / (2.0 * bandwidth_ * bandwidth_);
  // nbrs is sorted ascending, so the first entry carries the largest log weight.
  const double shift = nbrs.front().sq_distance;
  double total = 0.0;
  Vec3 acc;
  for (const Neighbor& n : nbrs) {
    const double w = std::exp(-(n.sq_distance - shift) * inv_two_h2);
    total += w;
    acc += (index_->point(n.index) - q) * w;
  }
  return acc / (total * bandwidth_ * bandwidth_);
}

void gather_network_inputs(const KdTree& index, const Vec3& query, std::size_t k_feat,
                           double feature_scale, std::size_t skip, std::span<Vec3> out) {
  thread_local std::vector<Neighbor> nbrs;
  std::size_t fetch = std::min(k_feat + 1, index.size());
  std::size_t kept = 0;
  for (;;) {
    index.knn(query, fetch, nbrs);
    kept = 0;
    for (const Neighbor& n : nbrs) {
      if (kept == k_feat) break;
      if (n.index == skip || n.sq_distance == 0.0) continue;
      out[kept++] = (index.point(n.index) - query) / feature_scale;
    }
    if (kept == k_feat || fetch == index.size()) break;
    fetch = std::min(2 * fetch, index.size());
  }
  const Vec3 fill = kept > 0 ? out[kept - 1] : Vec3{};
  for (std::size_t j = kept; j < k_feat; ++j) out[j] = fill;
}

NetworkScore::NetworkScore(NetworkWeights weights, const PointCloud& source, std::size_t k_feat,
                           double feature_scale)
    : weights_(std::make_shared<const NetworkWeights>(std::move(weights))),
      index_(std::make_shared<KdTree>(source)),
      k_feat_(k_feat),
      feature_scale_(feature_scale) {
  if (k_feat == 0) throw InvalidInput("k_feat must be positive");
  if (source.size() < k_feat)
    throw InvalidInput("source cloud has fewer points than k_feat");
  if (!(feature_scale > 0.0) || !std::isfinite(feature_scale))
    throw InvalidInput("feature scale must be positive and finite");
}

Vec3 NetworkScore::operator()(const Vec3& q) const {
  thread_local std::vector<Vec3> inputs;
  thread_local NetworkCache cache;
  inputs.resize(k_feat_);
  gather_network_inputs(*index_, q, k_feat_, feature_scale_, kNoSkip, inputs);
  return network_forward(*weights_, inputs, cache) / feature_scale_;
}

std::string to_string(ScoreBackend backend) {
  return backend == ScoreBackend::kde ? "kde" : "network";
}

double ScoreField::kernel_variance() const noexcept {
  if (const auto* k = as_kde()) return k->bandwidth() * k->bandwidth();
  return 0.0;
}

Vec3 ScoreField::evaluate(const Vec3& q) const {
  return std::visit([&](const auto& impl) { return impl(q); }, impl_);
}

std::vector<Vec3> ScoreField::evaluate(std::span<const Vec3> queries) const {
  std::vector<Vec3> out(queries.size());
  parallel_for(queries.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) out[i] = evaluate(queries[i]);
  });
  return out;
}

std::vector<Vec3> evaluate_score(const ScoreField& field, const PointCloud& queries) {
  return field.evaluate(queries.points());
}

double ar_dae_loss(std::span<const Vec3> predicted_scores, std::span<const Vec3> u,
                   double sigma_t) {
  if (predicted_scores.size() != u.size())
    throw InvalidInput("score and noise lists differ in length");
  if (u.empty()) throw InvalidInput("AR-DAE loss needs at least one sample");
  if (!(sigma_t > 0.0)) throw InvalidInput("sigma_t must be positive");
  double total = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i)
    total += squared_norm(sigma_t * predicted_scores[i] + u[i]);
  return total / static_cast<double>(u.size());
}

double median_knn_distance(const PointCloud& cloud, std::size_t k) {
  if (k == 0) throw InvalidInput("k must be positive");
  if (cloud.size() < 2) throw InvalidInput("need at least two points");
  const KdTree tree(cloud);
  std::vector<double> mean_dist(cloud.size());
  parallel_for(cloud.size(), [&](std::size_t begin, std::size_t end) {
    std::vector<Neighbor> nbrs;
    for (std::size_t i = begin; i < end; ++i) {
      tree.knn(cloud[i], k + 1, nbrs);
      double sum = 0.0;
      std::size_t used = 0;
      for (const Neighbor& n : nbrs) {
        if (n.index == i || used == k) continue;
        sum += n.distance();
        ++used;
      }
      mean_dist[i] = used > 0 ? sum / static_cast<double>(used) : 0.0;
    }
  });
  const auto mid = mean_dist.begin() + static_cast<std::ptrdiff_t>(mean_dist.size() / 2);
  std::nth_element(mean_dist.begin(), mid, mean_dist.end());
  return *mid;
}

}  // namespace pcdn
