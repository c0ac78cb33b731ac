#include "pcdn/metrics.hpp"

#include <vector>

#include "pcdn/bvh.hpp"
#include "pcdn/error.hpp"
#include "pcdn/kdtree.hpp"
#include "pcdn/parallel.hpp"
#include "pcdn/text.hpp"

namespace pcdn {
namespace {

long double mean_nearest_sq(const PointCloud& from, const KdTree& to) {
  std::vector<double> d2(from.size());
  parallel_for(from.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) d2[i] = to.nearest(from[i]).sq_distance;
  });
  long double total = 0;
  for (double v : d2) total += v;
  return total / static_cast<long double>(from.size());
}

}  // namespace

double chamfer_distance(const PointCloud& a, const PointCloud& b) {
  if (a.empty() || b.empty()) throw InvalidInput("Chamfer distance needs two non-empty clouds");
  const KdTree ta(a);
  const KdTree tb(b);
  return static_cast<double>(mean_nearest_sq(a, tb) + mean_nearest_sq(b, ta));
}

double point_to_mesh_distance(const PointCloud& cloud, const TriangleMesh& mesh) {
  if (cloud.empty()) throw InvalidInput("point-to-mesh distance needs a non-empty cloud");
  const TriangleBvh bvh(mesh);
  std::vector<double> d2(cloud.size());
  parallel_for(cloud.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) d2[i] = bvh.closest(cloud[i]).sq_distance;
  });
  long double total = 0;
  for (double v : d2) total += v;
  return static_cast<double>(total / static_cast<long double>(cloud.size()));
}

std::map<std::string, std::string> MetricReport::to_key_values() const {
  std::map<std::string, std::string> kv{
      {"metric.cd", format_double(cd)},
      {"metric.cd_x1e4", format_double(cd * kMetricDisplayScale, 6)},
      {"metric.cd_convention", "mean_sq_nn_a_to_b + mean_sq_nn_b_to_a"},
      {"metric.scale_note", scale_note}};
  if (p2m) {
    kv["metric.p2m"] = format_double(*p2m);
    kv["metric.p2m_x1e4"] = format_double(*p2m * kMetricDisplayScale, 6);
    kv["metric.p2m_convention"] = "mean_sq_point_to_mesh";
  }
  return kv;
}

MetricReport evaluate_against_cloud(const PointCloud& result, const PointCloud& reference) {
  const SphereTransform t = unit_sphere_transform(reference.points());
  MetricReport r;
  r.cd = chamfer_distance(t.apply(result), t.apply(reference));
  r.scale_note = "reference cloud centroid/max-norm unit sphere (radius " +
                 format_double(t.radius) + ")";
  return r;
}

MetricReport evaluate_against_mesh(const PointCloud& result, const TriangleMesh& reference,
                                   const PointCloud* reference_cloud) {
  const SphereTransform t = unit_sphere_transform(reference.vertices());
  const PointCloud normalized = t.apply(result);
  const TriangleMesh mesh = t.apply(reference);
  MetricReport r;
  r.p2m = point_to_mesh_distance(normalized, mesh);
  if (reference_cloud != nullptr) {
    r.cd = chamfer_distance(normalized, t.apply(*reference_cloud));
  } else {
    // No reference samples: CD against the mesh vertices.
    r.cd = chamfer_distance(normalized, PointCloud(mesh.vertices()));
  }
  r.scale_note = "reference mesh vertex centroid/max-norm unit sphere (radius " +
                 format_double(t.radius) + ")";
  return r;
}

}  // namespace pcdn
