#include "pcdn/noise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pcdn/error.hpp"
#include "pcdn/random.hpp"
#include "pcdn/text.hpp"

namespace pcdn {
namespace {

// Stream tags so the per-ray and per-laser draws never share a key.
constexpr std::uint64_t kGaussianStream = 0x6761757373ULL;
constexpr std::uint64_t kRayStream = 0x726179ULL;
constexpr std::uint64_t kLaserStream = 0x6c61736572ULL;

}  // namespace

std::string to_string(NoiseKind kind) { return kind == NoiseKind::gaussian ? "gaussian" : "lidar"; }

NoiseKind noise_kind_from_string(const std::string& name) {
  if (name == "gaussian") return NoiseKind::gaussian;
  if (name == "lidar") return NoiseKind::lidar;
  throw InvalidInput("unknown noise model '" + name + "' (expected gaussian or lidar)");
}

void NoiseSpec::validate() const {
  if (!(level >= 0.0) || !std::isfinite(level)) throw InvalidInput("noise level must be >= 0");
  if (kind == NoiseKind::lidar) {
    if (lidar_lasers == 0) throw InvalidInput("lidar_lasers must be positive");
    if (!(lidar_bias_level >= 0.0) || !std::isfinite(lidar_bias_level))
      throw InvalidInput("lidar_bias_level must be >= 0");
  }
}

std::map<std::string, std::string> NoiseSpec::to_key_values() const {
  return {{"noise.kind", to_string(kind)},
          {"noise.level", format_double(level)},
          {"noise.seed", std::to_string(seed)},
          {"noise.lidar_lasers", std::to_string(lidar_lasers)},
          {"noise.lidar_bias_level", format_double(lidar_bias_level)}};
}

NoiseSpec NoiseSpec::from_key_values(const std::map<std::string, std::string>& kv) {
  NoiseSpec s;
  auto get = [&](const char* key) -> const std::string* {
    auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  };
  if (auto v = get("noise.kind")) s.kind = noise_kind_from_string(*v);
  if (auto v = get("noise.level")) s.level = parse_double(*v);
  if (auto v = get("noise.seed")) s.seed = parse_u64(*v);
  if (auto v = get("noise.lidar_lasers")) s.lidar_lasers = parse_u64(*v);
  if (auto v = get("noise.lidar_bias_level")) s.lidar_bias_level = parse_double(*v);
  return s;
}

BoundingScales bounding_scales(const PointCloud& cloud) {
  const Vec3 c = cloud.centroid();
  BoundingScales s;
  Vec3 lo = cloud[0], hi = cloud[0];
  for (const Vec3& p : cloud) {
    s.sphere_radius = std::max(s.sphere_radius, distance(p, c));
    for (std::size_t d = 0; d < 3; ++d) {
      lo[d] = std::min(lo[d], p[d]);
      hi[d] = std::max(hi[d], p[d]);
    }
  }
  s.bbox_diagonal = norm(hi - lo);
  return s;
}

GaussianNoiseResult add_gaussian_noise(const PointCloud& cloud, const NoiseSpec& spec) {
  if (spec.kind != NoiseKind::gaussian) throw InvalidInput("noise spec is not gaussian");
  spec.validate();
  const double sigma = spec.level * bounding_scales(cloud).sphere_radius;
  std::vector<Vec3> out(cloud.data());
  for (std::size_t i = 0; i < out.size(); ++i) {
    CounterRng rng(spec.seed, kGaussianStream, i);
    const double dx = rng.normal();
    const double dy = rng.normal();
    const double dz = rng.normal();
    out[i] += Vec3{dx, dy, dz} * sigma;
  }
  return {PointCloud(std::move(out)), sigma};
}

LidarLayout lidar_layout(const PointCloud& cloud, std::size_t lasers) {
  if (lasers == 0) throw InvalidInput("lidar_lasers must be positive");
  const Vec3 c = cloud.centroid();
  const double r = bounding_scales(cloud).sphere_radius;
  LidarLayout layout;
  layout.sensor = c + Vec3{3.0 * (r > 0.0 ? r : 1.0), 0.0, 0.0};
  layout.bin.assign(cloud.size(), 0);

  std::vector<double> elevation(cloud.size(), 0.0);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3 d = cloud[i] - layout.sensor;
    const double len = norm(d);
    if (!(len > 0.0)) continue;
    elevation[i] = std::asin(std::clamp(d.z / len, -1.0, 1.0));
    lo = std::min(lo, elevation[i]);
    hi = std::max(hi, elevation[i]);
  }
  if (!(hi > lo)) return layout;
  const double width = (hi - lo) / static_cast<double>(lasers);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto b = static_cast<std::size_t>((elevation[i] - lo) / width);
    layout.bin[i] = std::min(b, lasers - 1);
  }
  return layout;
}

PointCloud add_lidar_noise(const PointCloud& cloud, const NoiseSpec& spec) {
  if (spec.kind != NoiseKind::lidar) throw InvalidInput("noise spec is not lidar");
  spec.validate();
  const double diag = bounding_scales(cloud).bbox_diagonal;
  const double ray_sigma = spec.level * diag;
  const double bias_sigma = spec.lidar_bias_level * diag;
  const LidarLayout layout = lidar_layout(cloud, spec.lidar_lasers);

  std::vector<double> bias(spec.lidar_lasers);
  for (std::size_t b = 0; b < bias.size(); ++b)
    bias[b] = bias_sigma * CounterRng(spec.seed, kLaserStream, b).normal();

  std::vector<Vec3> out(cloud.data());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Vec3 ray = out[i] - layout.sensor;
    const double len = norm(ray);
    if (!(len > 0.0)) continue;
    const double noise = ray_sigma * CounterRng(spec.seed, kRayStream, i).normal();
    out[i] += ray * ((bias[layout.bin[i]] + noise) / len);
  }
  return PointCloud(std::move(out));
}

PointCloud add_noise(const PointCloud& cloud, const NoiseSpec& spec) {
  if (spec.kind == NoiseKind::gaussian) return add_gaussian_noise(cloud, spec).cloud;
  return add_lidar_noise(cloud, spec);
}

}  // namespace pcdn
