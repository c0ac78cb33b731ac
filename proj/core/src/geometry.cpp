#include "pcdn/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pcdn/error.hpp"

namespace pcdn {

PointCloud::PointCloud(std::vector<Vec3> points) : points_(std::move(points)) {
  if (points_.empty()) throw InvalidInput("point cloud must contain at least one point");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!is_finite(points_[i]))
      throw InvalidInput("point " + std::to_string(i) + " has a non-finite coordinate");
  }
}

Vec3 PointCloud::centroid() const {
  long double sx = 0, sy = 0, sz = 0;
  for (const Vec3& p : points_) {
    sx += p.x;
    sy += p.y;
    sz += p.z;
  }
  const auto n = static_cast<long double>(points_.size());
  return {static_cast<double>(sx / n), static_cast<double>(sy / n), static_cast<double>(sz / n)};
}

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  return 0.5 * norm(cross(b - a, c - a));
}

TriangleMesh::TriangleMesh(std::vector<Vec3> vertices, std::vector<Face> faces)
    : vertices_(std::move(vertices)) {
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    if (!is_finite(vertices_[i]))
      throw InvalidInput("mesh vertex " + std::to_string(i) + " has a non-finite coordinate");
  }
  faces_.reserve(faces.size());
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const Face& t = faces[f];
    for (auto v : t) {
      if (v >= vertices_.size())
        throw InvalidInput("face " + std::to_string(f) + " references vertex " +
                           std::to_string(v) + " out of range");
    }
    if (triangle_area(vertices_[t[0]], vertices_[t[1]], vertices_[t[2]]) > 0.0) {
      faces_.push_back(t);
    } else {
      ++dropped_faces_;
    }
  }
}

double TriangleMesh::face_area(std::size_t f) const {
  const auto [a, b, c] = triangle(f);
  return triangle_area(a, b, c);
}

double TriangleMesh::total_area() const {
  double total = 0.0;
  for (std::size_t f = 0; f < faces_.size(); ++f) total += face_area(f);
  return total;
}

PointCloud SphereTransform::apply(const PointCloud& cloud) const {
  std::vector<Vec3> out;
  out.reserve(cloud.size());
  for (const Vec3& p : cloud) out.push_back(apply(p));
  return PointCloud(std::move(out));
}

PointCloud SphereTransform::invert(const PointCloud& cloud) const {
  std::vector<Vec3> out;
  out.reserve(cloud.size());
  for (const Vec3& p : cloud) out.push_back(invert(p));
  return PointCloud(std::move(out));
}

TriangleMesh SphereTransform::apply(const TriangleMesh& mesh) const {
  std::vector<Vec3> verts;
  verts.reserve(mesh.vertices().size());
  for (const Vec3& v : mesh.vertices()) verts.push_back(apply(v));
  return TriangleMesh(std::move(verts), mesh.faces());
}

SphereTransform unit_sphere_transform(std::span<const Vec3> points) {
  if (points.empty()) throw InvalidInput("cannot normalize an empty point set");
  long double sx = 0, sy = 0, sz = 0;
  for (const Vec3& p : points) {
    sx += p.x;
    sy += p.y;
    sz += p.z;
  }
  const auto n = static_cast<long double>(points.size());
  const Vec3 center{static_cast<double>(sx / n), static_cast<double>(sy / n),
                    static_cast<double>(sz / n)};
  double radius = 0.0;
  for (const Vec3& p : points) radius = std::max(radius, distance(p, center));
  if (!(radius > 0.0)) radius = 1.0;
  return {center, radius};
}

std::pair<PointCloud, SphereTransform> normalize_to_unit_sphere(const PointCloud& cloud) {
  const SphereTransform t = unit_sphere_transform(cloud.points());
  return {t.apply(cloud), t};
}

double point_triangle_sq_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  if (!(triangle_area(a, b, c) > 0.0)) throw InvalidInput("degenerate triangle");
  return point_triangle_sq_distance_unchecked(p, a, b, c);
}

// Voronoi-region walk over the closed triangle (vertex, edge, then face
// regions), returning the squared distance to the closest point.
double point_triangle_sq_distance_unchecked(const Vec3& p, const Vec3& a, const Vec3& b,
                                            const Vec3& c) {
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 ap = p - a;
  const double d1 = dot(ab, ap);
  const double d2 = dot(ac, ap);
  if (d1 <= 0.0 && d2 <= 0.0) return squared_norm(ap);

  const Vec3 bp = p - b;
  const double d3 = dot(ab, bp);
  const double d4 = dot(ac, bp);
  if (d3 >= 0.0 && d4 <= d3) return squared_norm(bp);

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double v = d1 / (d1 - d3);
    return squared_distance(p, a + v * ab);
  }

  const Vec3 cp = p - c;
  const double d5 = dot(ab, cp);
  const double d6 = dot(ac, cp);
  if (d6 >= 0.0 && d5 <= d6) return squared_norm(cp);

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double w = d2 / (d2 - d6);
    return squared_distance(p, a + w * ac);
  }

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return squared_distance(p, b + w * (c - b));
  }

  // Interior: distance to the plane. Using the normal directly keeps the
  // result exact for points on the plane.
  const Vec3 n = cross(ab, ac);
  const double h = dot(ap, n);
  return h * h / squared_norm(n);
}

}  // namespace pcdn
