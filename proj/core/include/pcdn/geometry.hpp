#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "pcdn/vec3.hpp"

namespace pcdn {

// An ordered, non-empty set of finite 3D positions. Index correspondence is
// the contract every transformation in the library preserves.
class PointCloud {
 public:
  PointCloud() = default;
  explicit PointCloud(std::vector<Vec3> points);

  std::size_t size() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }

  const Vec3& operator[](std::size_t i) const { return points_[i]; }
  std::span<const Vec3> points() const noexcept { return points_; }
  const std::vector<Vec3>& data() const noexcept { return points_; }

  auto begin() const noexcept { return points_.begin(); }
  auto end() const noexcept { return points_.end(); }

  Vec3 centroid() const;

  friend bool operator==(const PointCloud&, const PointCloud&) = default;

 private:
  std::vector<Vec3> points_;
};

using Face = std::array<std::uint32_t, 3>;

class TriangleMesh {
 public:
  TriangleMesh() = default;
  // Validates indices and drops zero-area faces; see dropped_faces().
  TriangleMesh(std::vector<Vec3> vertices, std::vector<Face> faces);

  const std::vector<Vec3>& vertices() const noexcept { return vertices_; }
  const std::vector<Face>& faces() const noexcept { return faces_; }
  std::size_t dropped_faces() const noexcept { return dropped_faces_; }

  std::array<Vec3, 3> triangle(std::size_t f) const {
    const Face& t = faces_[f];
    return {vertices_[t[0]], vertices_[t[1]], vertices_[t[2]]};
  }
  double face_area(std::size_t f) const;
  double total_area() const;

 private:
  std::vector<Vec3> vertices_;
  std::vector<Face> faces_;
  std::size_t dropped_faces_ = 0;
};

// Maps p to (p - center) / radius.
struct SphereTransform {
  Vec3 center;
  double radius = 1.0;

  Vec3 apply(const Vec3& p) const { return (p - center) / radius; }
  Vec3 invert(const Vec3& p) const { return p * radius + center; }

  PointCloud apply(const PointCloud& cloud) const;
  PointCloud invert(const PointCloud& cloud) const;
  TriangleMesh apply(const TriangleMesh& mesh) const;
};

// Centroid / max-norm normalization. A cloud whose points all coincide keeps
// radius 1.
std::pair<PointCloud, SphereTransform> normalize_to_unit_sphere(const PointCloud& cloud);
SphereTransform unit_sphere_transform(std::span<const Vec3> points);

// Exact squared distance from p to the closed triangle abc. Throws
// InvalidInput for a degenerate triangle.
double point_triangle_sq_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

// Same computation without the degeneracy check, for validated meshes.
double point_triangle_sq_distance_unchecked(const Vec3& p, const Vec3& a, const Vec3& b,
                                            const Vec3& c);

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c);

}  // namespace pcdn
