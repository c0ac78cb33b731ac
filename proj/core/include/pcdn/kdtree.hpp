#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "pcdn/geometry.hpp"

namespace pcdn {

struct Neighbor {
  std::size_t index = 0;
  double sq_distance = 0.0;

  double distance() const;
  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// Orders neighbors by (squared distance, index).
inline bool closer(const Neighbor& a, const Neighbor& b) {
  return a.sq_distance < b.sq_distance || (a.sq_distance == b.sq_distance && a.index < b.index);
}

// Balanced kd-tree over a fixed set of points. Immutable after construction,
// so concurrent queries are safe.
class KdTree {
 public:
  explicit KdTree(const PointCloud& cloud);
  explicit KdTree(std::vector<Vec3> points);

  std::size_t size() const noexcept { return points_.size(); }
  const Vec3& point(std::size_t i) const { return points_[i]; }

  // min(k, size()) nearest points sorted by (distance, index). k == 0 gives
  // an empty result.
  std::vector<Neighbor> knn(const Vec3& q, std::size_t k) const;
  void knn(const Vec3& q, std::size_t k, std::vector<Neighbor>& out) const;

  Neighbor nearest(const Vec3& q) const;

  // All points with distance <= radius, sorted by (distance, index).
  std::vector<Neighbor> radius_search(const Vec3& q, double radius) const;

 private:
  struct Node {
    // Leaf: [begin, end) into order_. Inner: split dimension/value, children.
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::uint8_t dim = 0;
    double split = 0.0;
    Vec3 lo;
    Vec3 hi;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  void knn_recurse(std::int32_t node, const Vec3& q, std::size_t k,
                   std::vector<Neighbor>& heap) const;
  void radius_recurse(std::int32_t node, const Vec3& q, double r2,
                      std::vector<Neighbor>& out) const;

  std::vector<Vec3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
  std::int32_t root_ = -1;
};

using NeighborIndex = KdTree;

inline NeighborIndex build_neighbor_index(const PointCloud& cloud) { return NeighborIndex(cloud); }

inline std::vector<Neighbor> knn_query(const NeighborIndex& index, const Vec3& q, std::size_t k) {
  return index.knn(q, k);
}

}  // namespace pcdn
