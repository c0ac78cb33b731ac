#pragma once

#include <map>
#include <optional>
#include <string>

#include "pcdn/geometry.hpp"

namespace pcdn {

// Tables conventionally print both metrics multiplied by this factor.
inline constexpr double kMetricDisplayScale = 1e4;

// Mean squared nearest-neighbor distance a -> b plus the same for b -> a.
double chamfer_distance(const PointCloud& a, const PointCloud& b);

// Mean over points of the squared distance to the closest mesh triangle.
double point_to_mesh_distance(const PointCloud& cloud, const TriangleMesh& mesh);

struct MetricReport {
  double cd = 0.0;
  std::optional<double> p2m;
  std::string scale_note;

  std::map<std::string, std::string> to_key_values() const;
};

// Applies the reference's unit-sphere transform to both arguments, then
// computes CD (and P2M when a mesh is given). With a mesh reference, the
// transform comes from the mesh vertices and CD is taken against
// `reference_cloud` if provided.
MetricReport evaluate_against_cloud(const PointCloud& result, const PointCloud& reference);
MetricReport evaluate_against_mesh(const PointCloud& result, const TriangleMesh& reference,
                                   const PointCloud* reference_cloud = nullptr);

}  // namespace pcdn
