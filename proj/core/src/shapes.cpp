#include "pcdn/shapes.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <utility>

#include "pcdn/error.hpp"

namespace pcdn::shapes {
namespace {

std::uint32_t midpoint(std::vector<Vec3>& verts,
                       std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t>& cache,
                       std::uint32_t a, std::uint32_t b) {
  const auto key = std::minmax(a, b);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  const Vec3 m = (verts[a] + verts[b]) * 0.5;
  verts.push_back(m / norm(m));
  const auto id = static_cast<std::uint32_t>(verts.size() - 1);
  cache.emplace(key, id);
  return id;
}

}  // namespace

TriangleMesh icosphere(int subdivisions) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> verts = {{-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0},
                             {0, -1, t}, {0, 1, t},  {0, -1, -t}, {0, 1, -t},
                             {t, 0, -1}, {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
  for (Vec3& v : verts) v /= norm(v);
  std::vector<Face> faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                             {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                             {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                             {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> cache;
    std::vector<Face> next;
    next.reserve(faces.size() * 4);
    for (const Face& f : faces) {
      const std::uint32_t ab = midpoint(verts, cache, f[0], f[1]);
      const std::uint32_t bc = midpoint(verts, cache, f[1], f[2]);
      const std::uint32_t ca = midpoint(verts, cache, f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }
  return TriangleMesh(std::move(verts), std::move(faces));
}

TriangleMesh torus(double major_radius, double minor_radius, int major_segments,
                   int minor_segments) {
  if (!(major_radius > minor_radius && minor_radius > 0.0) || major_segments < 3 ||
      minor_segments < 3)
    throw InvalidInput("torus needs major > minor > 0 and at least 3 segments each way");
  const auto nu = static_cast<std::uint32_t>(major_segments);
  const auto nv = static_cast<std::uint32_t>(minor_segments);
  std::vector<Vec3> verts;
  verts.reserve(nu * nv);
  for (std::uint32_t i = 0; i < nu; ++i) {
    const double u = 2.0 * std::numbers::pi * i / nu;
    for (std::uint32_t j = 0; j < nv; ++j) {
      const double v = 2.0 * std::numbers::pi * j / nv;
      const double ring = major_radius + minor_radius * std::cos(v);
      verts.push_back({ring * std::cos(u), ring * std::sin(u), minor_radius * std::sin(v)});
    }
  }
  std::vector<Face> faces;
  faces.reserve(2 * nu * nv);
  for (std::uint32_t i = 0; i < nu; ++i) {
    for (std::uint32_t j = 0; j < nv; ++j) {
      const std::uint32_t a = i * nv + j;
      const std::uint32_t b = ((i + 1) % nu) * nv + j;
      const std::uint32_t c = ((i + 1) % nu) * nv + (j + 1) % nv;
      const std::uint32_t d = i * nv + (j + 1) % nv;
      faces.push_back({a, b, c});
      faces.push_back({a, c, d});
    }
  }
  return TriangleMesh(std::move(verts), std::move(faces));
}

TriangleMesh beveled_cube(double bevel_radius, int resolution) {
  if (!(bevel_radius > 0.0 && bevel_radius < 1.0) || resolution < 2)
    throw InvalidInput("bevel radius must lie in (0, 1) and resolution >= 2");
  const double inner = 1.0 - bevel_radius;
  const auto res = static_cast<std::uint32_t>(resolution);
  std::vector<Vec3> verts;
  std::vector<Face> faces;
  // One grid per cube face, each mapped onto the rounded surface.
  for (std::size_t axis = 0; axis < 3; ++axis) {
    for (double side : {-1.0, 1.0}) {
      const std::size_t u_axis = (axis + 1) % 3;
      const std::size_t v_axis = (axis + 2) % 3;
      const auto base = static_cast<std::uint32_t>(verts.size());
      for (std::uint32_t i = 0; i <= res; ++i) {
        for (std::uint32_t j = 0; j <= res; ++j) {
          Vec3 p;
          p[axis] = side;
          p[u_axis] = -1.0 + 2.0 * i / res;
          p[v_axis] = -1.0 + 2.0 * j / res;
          Vec3 core;
          for (std::size_t d = 0; d < 3; ++d) core[d] = std::clamp(p[d], -inner, inner);
          const Vec3 offset = p - core;
          verts.push_back(core + offset * (bevel_radius / norm(offset)));
        }
      }
      for (std::uint32_t i = 0; i < res; ++i) {
        for (std::uint32_t j = 0; j < res; ++j) {
          const std::uint32_t a = base + i * (res + 1) + j;
          const std::uint32_t b = a + res + 1;
          if (side > 0) {
            faces.push_back({a, b, b + 1});
            faces.push_back({a, b + 1, a + 1});
          } else {
            faces.push_back({a, b + 1, b});
            faces.push_back({a, a + 1, b + 1});
          }
        }
      }
    }
  }
  return TriangleMesh(std::move(verts), std::move(faces));
}

TriangleMesh by_name(std::string_view name) {
  if (name == "sphere") return icosphere();
  if (name == "torus") return torus();
  if (name == "cube") return beveled_cube();
  throw InvalidInput("unknown shape '" + std::string(name) + "' (expected sphere, torus, cube)");
}

std::vector<std::string> names() { return {"sphere", "torus", "cube"}; }

}  // namespace pcdn::shapes
