#include "pcdn/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pcdn/error.hpp"

namespace pcdn {
namespace {

constexpr std::uint32_t kLeafSize = 8;

double box_sq_distance(const Vec3& q, const Vec3& lo, const Vec3& hi) {
  double d2 = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    if (q[i] < lo[i]) {
      const double d = lo[i] - q[i];
      d2 += d * d;
    } else if (q[i] > hi[i]) {
      const double d = q[i] - hi[i];
      d2 += d * d;
    }
  }
  return d2;
}

// Max-heap on (sq_distance, index): the front is the current worst result.
struct WorseFirst {
  bool operator()(const Neighbor& a, const Neighbor& b) const { return closer(a, b); }
};

}  // namespace

double Neighbor::distance() const { return std::sqrt(sq_distance); }

KdTree::KdTree(const PointCloud& cloud) : KdTree(cloud.data()) {}

KdTree::KdTree(std::vector<Vec3> points) : points_(std::move(points)) {
  if (points_.empty()) throw InvalidInput("cannot build a neighbor index over an empty cloud");
  if (points_.size() > std::numeric_limits<std::uint32_t>::max() / 2)
    throw InvalidInput("point cloud too large for the neighbor index");
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  nodes_.reserve(2 * points_.size() / kLeafSize + 1);
  root_ = build(0, static_cast<std::uint32_t>(points_.size()));
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
  Node node;
  node.begin = begin;
  node.end = end;
  node.lo = node.hi = points_[order_[begin]];
  for (std::uint32_t i = begin + 1; i < end; ++i) {
    const Vec3& p = points_[order_[i]];
    for (std::size_t d = 0; d < 3; ++d) {
      node.lo[d] = std::min(node.lo[d], p[d]);
      node.hi[d] = std::max(node.hi[d], p[d]);
    }
  }
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(node);
  if (end - begin <= kLeafSize) return id;

  std::uint8_t dim = 0;
  double extent = node.hi.x - node.lo.x;
  for (std::uint8_t d = 1; d < 3; ++d) {
    if (node.hi[d] - node.lo[d] > extent) {
      extent = node.hi[d] - node.lo[d];
      dim = d;
    }
  }
  if (!(extent > 0.0)) return id;  // all points coincide: keep as one leaf

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double pa = points_[a][dim];
                     const double pb = points_[b][dim];
                     return pa < pb || (pa == pb && a < b);
                   });
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  Node& self = nodes_[static_cast<std::size_t>(id)];
  self.dim = dim;
  self.split = points_[order_[mid]][dim];
  self.left = left;
  self.right = right;
  return id;
}

std::vector<Neighbor> KdTree::knn(const Vec3& q, std::size_t k) const {
  std::vector<Neighbor> out;
  knn(q, k, out);
  return out;
}

void KdTree::knn(const Vec3& q, std::size_t k, std::vector<Neighbor>& out) const {
  out.clear();
  k = std::min(k, points_.size());
  if (k == 0) return;
  out.reserve(k);
  knn_recurse(root_, q, k, out);
  std::sort_heap(out.begin(), out.end(), WorseFirst{});
}

void KdTree::knn_recurse(std::int32_t id, const Vec3& q, std::size_t k,
                         std::vector<Neighbor>& heap) const {
  const Node& node = nodes_[static_cast<std::size_t>(id)];
  if (heap.size() == k && box_sq_distance(q, node.lo, node.hi) > heap.front().sq_distance) return;

  if (node.left < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const Neighbor cand{order_[i], squared_distance(q, points_[order_[i]])};
      if (heap.size() < k) {
        heap.push_back(cand);
        std::push_heap(heap.begin(), heap.end(), WorseFirst{});
      } else if (closer(cand, heap.front())) {
        std::pop_heap(heap.begin(), heap.end(), WorseFirst{});
        heap.back() = cand;
        std::push_heap(heap.begin(), heap.end(), WorseFirst{});
      }
    }
    return;
  }

  const bool go_left = q[node.dim] < node.split;
  knn_recurse(go_left ? node.left : node.right, q, k, heap);
  knn_recurse(go_left ? node.right : node.left, q, k, heap);
}

Neighbor KdTree::nearest(const Vec3& q) const {
  std::vector<Neighbor> out;
  out.reserve(1);
  knn_recurse(root_, q, 1, out);
  return out.front();
}

std::vector<Neighbor> KdTree::radius_search(const Vec3& q, double radius) const {
  std::vector<Neighbor> out;
  if (radius < 0.0) return out;
  radius_recurse(root_, q, radius * radius, out);
  std::sort(out.begin(), out.end(), closer);
  return out;
}

void KdTree::radius_recurse(std::int32_t id, const Vec3& q, double r2,
                            std::vector<Neighbor>& out) const {
  const Node& node = nodes_[static_cast<std::size_t>(id)];
  if (box_sq_distance(q, node.lo, node.hi) > r2) return;
  if (node.left < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const double d2 = squared_distance(q, points_[order_[i]]);
      if (d2 <= r2) out.push_back({order_[i], d2});
    }
    return;
  }
  radius_recurse(node.left, q, r2, out);
  radius_recurse(node.right, q, r2, out);
}

}  // namespace pcdn
