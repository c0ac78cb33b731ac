#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>

#include "pcdn/geometry.hpp"

namespace pcdn {

enum class NoiseKind { gaussian, lidar };

std::string to_string(NoiseKind kind);
NoiseKind noise_kind_from_string(const std::string& name);

// Corruption model with parameters relative to the cloud's own scale.
// gaussian: `level` is a fraction of the bounding-sphere radius.
// lidar: `level` is the per-ray range noise as a fraction of the bounding-box
// diagonal; `lidar_bias_level` likewise for the per-laser range bias.
struct NoiseSpec {
  NoiseKind kind = NoiseKind::gaussian;
  double level = 0.01;
  std::uint64_t seed = 0;
  std::size_t lidar_lasers = 64;
  double lidar_bias_level = 0.005;

  void validate() const;

  // Flat key=value form, keys prefixed with "noise.".
  std::map<std::string, std::string> to_key_values() const;
  static NoiseSpec from_key_values(const std::map<std::string, std::string>& kv);

  friend bool operator==(const NoiseSpec&, const NoiseSpec&) = default;
};

struct BoundingScales {
  double sphere_radius = 0.0;  // max distance from the centroid
  double bbox_diagonal = 0.0;  // diagonal of the axis-aligned bounding box
};

BoundingScales bounding_scales(const PointCloud& cloud);

struct GaussianNoiseResult {
  PointCloud cloud;
  double sigma_abs = 0.0;
};

// Adds i.i.d. N(0, sigma_abs^2 I) with sigma_abs = level * sphere_radius.
// Point i draws from a stream keyed by (seed, i).
GaussianNoiseResult add_gaussian_noise(const PointCloud& cloud, const NoiseSpec& spec);

// Statistical LiDAR model: a virtual sensor sits 3 sphere radii from the
// centroid along +x; points are binned by elevation into `lidar_lasers` bins,
// each bin shares one range bias, and every ray adds independent range noise.
// Displacement is along the sensor-to-point direction.
PointCloud add_lidar_noise(const PointCloud& cloud, const NoiseSpec& spec);

// Dispatches on spec.kind.
PointCloud add_noise(const PointCloud& cloud, const NoiseSpec& spec);

// Exposed for tests: the sensor position and elevation bin of each point.
struct LidarLayout {
  Vec3 sensor;
  std::vector<std::size_t> bin;
};
LidarLayout lidar_layout(const PointCloud& cloud, std::size_t lasers);

}  // namespace pcdn
