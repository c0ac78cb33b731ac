#include "pcdn/tweedie.hpp"

#include <cmath>
#include <limits>

#include "pcdn/error.hpp"
#include "pcdn/parallel.hpp"

namespace pcdn {

void DenoiseConfig::validate() const {
  if (!(sigma_abs > 0.0) || !std::isfinite(sigma_abs))
    throw InvalidInput("sigma_abs must be positive and finite");
  if (!(kernel_variance >= 0.0) || !std::isfinite(kernel_variance))
    throw InvalidInput("kernel variance must be non-negative and finite");
}

PointCloud tweedie_update(const PointCloud& cloud, std::span<const Vec3> scores,
                          double step_variance) {
  if (scores.size() != cloud.size()) throw InvalidInput("one score per point is required");
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (!is_finite(scores[i])) throw ScoreEvaluationError(i);
  std::vector<Vec3> out(cloud.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = cloud[i] + step_variance * scores[i];
  return PointCloud(std::move(out));
}

PointCloud tweedie_denoise(const PointCloud& cloud, const ScoreField& field,
                           const DenoiseConfig& cfg) {
  cfg.validate();
  const std::vector<Vec3> scores = field.evaluate(cloud.points());
  return tweedie_update(cloud, scores, cfg.step_variance());
}

Vec3 posterior_mean_oracle(const Vec3& y, const PointCloud& clean_points, double sigma_abs) {
  if (clean_points.empty()) throw InvalidInput("prior needs at least one clean point");
  if (!(sigma_abs > 0.0)) throw InvalidInput("sigma_abs must be positive");
  using ld = long double;
  const ld inv_two_var = 1.0L / (2.0L * static_cast<ld>(sigma_abs) * sigma_abs);
  std::vector<ld> logw(clean_points.size());
  ld max_logw = -std::numeric_limits<ld>::infinity();
  for (std::size_t i = 0; i < clean_points.size(); ++i) {
    const Vec3& x = clean_points[i];
    const ld dx = static_cast<ld>(y.x) - x.x;
    const ld dy = static_cast<ld>(y.y) - x.y;
    const ld dz = static_cast<ld>(y.z) - x.z;
    logw[i] = -(dx * dx + dy * dy + dz * dz) * inv_two_var;
    max_logw = std::max(max_logw, logw[i]);
  }
  ld total = 0, sx = 0, sy = 0, sz = 0;
  for (std::size_t i = 0; i < clean_points.size(); ++i) {
    const ld w = std::exp(logw[i] - max_logw);
    total += w;
    sx += w * clean_points[i].x;
    sy += w * clean_points[i].y;
    sz += w * clean_points[i].z;
  }
  return {static_cast<double>(sx / total), static_cast<double>(sy / total),
          static_cast<double>(sz / total)};
}

}  // namespace pcdn
