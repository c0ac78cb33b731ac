#include "pcdn/bvh.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <numeric>

#include "pcdn/error.hpp"

namespace pcdn {
namespace {

constexpr std::uint32_t kLeafSize = 4;

double box_sq_distance(const Vec3& q, const Vec3& lo, const Vec3& hi) {
  double d2 = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double d = std::max({lo[i] - q[i], 0.0, q[i] - hi[i]});
    d2 += d * d;
  }
  return d2;
}

}  // namespace

TriangleBvh::TriangleBvh(const TriangleMesh& mesh) {
  if (mesh.faces().empty() || !(mesh.total_area() > 0.0))
    throw InvalidInput("mesh has zero total area");
  tris_.reserve(mesh.faces().size());
  for (std::size_t f = 0; f < mesh.faces().size(); ++f) {
    const auto [a, b, c] = mesh.triangle(f);
    tris_.push_back({a, b, c});
  }
  order_.resize(tris_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  nodes_.reserve(2 * tris_.size() / kLeafSize + 1);
  build(0, static_cast<std::uint32_t>(tris_.size()));
}

std::int32_t TriangleBvh::build(std::uint32_t begin, std::uint32_t end) {
  Node node;
  node.begin = begin;
  node.end = end;
  constexpr double inf = std::numeric_limits<double>::infinity();
  node.lo = {inf, inf, inf};
  node.hi = {-inf, -inf, -inf};
  Vec3 clo = node.lo, chi = node.hi;
  for (std::uint32_t i = begin; i < end; ++i) {
    const Tri& t = tris_[order_[i]];
    for (const Vec3* v : {&t.a, &t.b, &t.c}) {
      for (std::size_t d = 0; d < 3; ++d) {
        node.lo[d] = std::min(node.lo[d], (*v)[d]);
        node.hi[d] = std::max(node.hi[d], (*v)[d]);
      }
    }
    const Vec3 centroid = (t.a + t.b + t.c) / 3.0;
    for (std::size_t d = 0; d < 3; ++d) {
      clo[d] = std::min(clo[d], centroid[d]);
      chi[d] = std::max(chi[d], centroid[d]);
    }
  }
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(node);
  if (end - begin <= kLeafSize) return id;

  std::size_t dim = 0;
  for (std::size_t d = 1; d < 3; ++d)
    if (chi[d] - clo[d] > chi[dim] - clo[dim]) dim = d;

  const std::uint32_t mid = begin + (end - begin) / 2;
  auto key = [&](std::uint32_t f) {
    const Tri& t = tris_[f];
    return t.a[dim] + t.b[dim] + t.c[dim];
  };
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t x, std::uint32_t y) {
                     const double kx = key(x), ky = key(y);
                     return kx < ky || (kx == ky && x < y);
                   });
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  nodes_[static_cast<std::size_t>(id)].left = left;
  nodes_[static_cast<std::size_t>(id)].right = right;
  return id;
}

TriangleHit TriangleBvh::closest(const Vec3& p) const {
  TriangleHit best{0, std::numeric_limits<double>::infinity()};
  std::array<std::int32_t, 128> stack{};
  std::size_t top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[static_cast<std::size_t>(stack[--top])];
    if (box_sq_distance(p, node.lo, node.hi) > best.sq_distance) continue;
    if (node.left < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        const std::uint32_t f = order_[i];
        const Tri& t = tris_[f];
        const double d2 = point_triangle_sq_distance_unchecked(p, t.a, t.b, t.c);
        if (d2 < best.sq_distance || (d2 == best.sq_distance && f < best.face)) best = {f, d2};
      }
      continue;
    }
    const Node& l = nodes_[static_cast<std::size_t>(node.left)];
    const Node& r = nodes_[static_cast<std::size_t>(node.right)];
    const double dl = box_sq_distance(p, l.lo, l.hi);
    const double dr = box_sq_distance(p, r.lo, r.hi);
    // Push the farther child first so the nearer one is explored first.
    if (dl < dr) {
      stack[top++] = node.right;
      stack[top++] = node.left;
    } else {
      stack[top++] = node.left;
      stack[top++] = node.right;
    }
  }
  return best;
}

}  // namespace pcdn
