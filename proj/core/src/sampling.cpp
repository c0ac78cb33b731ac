#include "pcdn/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <random>
#include <vector>

#include "pcdn/error.hpp"
#include "pcdn/kdtree.hpp"

namespace pcdn {
namespace {

std::vector<Vec3> sample_uniform(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed) {
  std::vector<double> cdf(mesh.faces().size());
  double total = 0.0;
  for (std::size_t f = 0; f < cdf.size(); ++f) {
    total += mesh.face_area(f);
    cdf[f] = total;
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Vec3> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = unit(rng) * total;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), t);
    if (it == cdf.end()) --it;
    const auto [a, b, c] = mesh.triangle(static_cast<std::size_t>(it - cdf.begin()));
    const double r1 = std::sqrt(unit(rng));
    const double r2 = unit(rng);
    out.push_back(a * (1.0 - r1) + b * (r1 * (1.0 - r2)) + c * (r1 * r2));
  }
  return out;
}

// Weighted sample elimination: every candidate carries the summed weight
// (1 - d / 2r_max)^8 of its neighbors within 2 r_max; the heaviest candidate
// is removed and its neighbors' weights are lowered, until n remain.
std::vector<Vec3> eliminate(std::vector<Vec3> candidates, std::size_t n, double area) {
  constexpr double alpha = 8.0;
  const double r_max = 2.0 * std::sqrt(area / (2.0 * std::sqrt(3.0) * static_cast<double>(n)));
  const double radius = 2.0 * r_max;

  const KdTree tree(candidates);
  const std::size_t m = candidates.size();
  std::vector<std::vector<std::pair<std::uint32_t, double>>> links(m);
  std::vector<double> weight(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (const Neighbor& nb : tree.radius_search(candidates[i], radius)) {
      if (nb.index == i) continue;
      const double w = std::pow(1.0 - std::min(nb.distance(), radius) / radius, alpha);
      links[i].emplace_back(static_cast<std::uint32_t>(nb.index), w);
      weight[i] += w;
    }
  }

  // Lazy max-heap on (weight, lower index first).
  using Entry = std::pair<double, std::uint32_t>;
  auto cmp = [](const Entry& a, const Entry& b) {
    return a.first < b.first || (a.first == b.first && a.second > b.second);
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(cmp)> heap(cmp);
  for (std::size_t i = 0; i < m; ++i) heap.emplace(weight[i], static_cast<std::uint32_t>(i));

  std::vector<char> alive(m, 1);
  std::size_t remaining = m;
  while (remaining > n) {
    const auto [w, i] = heap.top();
    heap.pop();
    if (!alive[i] || w != weight[i]) continue;
    alive[i] = 0;
    --remaining;
    for (const auto& [j, wj] : links[i]) {
      if (!alive[j]) continue;
      weight[j] -= wj;
      heap.emplace(weight[j], j);
    }
  }

  std::vector<Vec3> out;
  out.reserve(n);
  for (std::size_t i = 0; i < m; ++i)
    if (alive[i]) out.push_back(candidates[i]);
  return out;
}

}  // namespace

PointCloud sample_mesh(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed,
                       SamplingMode mode) {
  if (n == 0) throw InvalidInput("sample count must be positive");
  const double area = mesh.faces().empty() ? 0.0 : mesh.total_area();
  if (!(area > 0.0)) throw InvalidInput("cannot sample a mesh with zero total area");
  if (mode == SamplingMode::uniform) return PointCloud(sample_uniform(mesh, n, seed));
  return PointCloud(eliminate(sample_uniform(mesh, 4 * n, seed), n, area));
}

}  // namespace pcdn
