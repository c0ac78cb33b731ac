#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "pcdn/geometry.hpp"

namespace pcdn {

struct TriangleHit {
  std::size_t face = 0;
  double sq_distance = 0.0;
};

// Axis-aligned bounding-volume hierarchy over the faces of a mesh, answering
// exact closest-triangle queries. Holds a copy of the triangles.
class TriangleBvh {
 public:
  explicit TriangleBvh(const TriangleMesh& mesh);

  std::size_t size() const noexcept { return tris_.size(); }

  // Closest face and squared distance; ties resolve to the smaller face index.
  TriangleHit closest(const Vec3& p) const;

 private:
  struct Tri {
    Vec3 a, b, c;
  };
  struct Node {
    Vec3 lo, hi;
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);

  std::vector<Tri> tris_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace pcdn
