#pragma once

#include <span>
#include <vector>

#include "pcdn/geometry.hpp"
#include "pcdn/score.hpp"

namespace pcdn {

// sigma_abs: noise std in the cloud's current frame.
// kernel_variance: smoothing variance already contained in the score
// estimate (ScoreField::kernel_variance() for a KDE field). The step uses
// sigma_abs^2 + kernel_variance; 0 gives the plain posterior-mean update.
struct DenoiseConfig {
  double sigma_abs = 0.0;
  double kernel_variance = 0.0;

  void validate() const;
  double step_variance() const noexcept { return sigma_abs * sigma_abs + kernel_variance; }
};

// x_i = y_i + step_variance * S(y_i), one pass, order preserved. Throws
// ScoreEvaluationError naming the first point with a non-finite score.
PointCloud tweedie_denoise(const PointCloud& cloud, const ScoreField& field,
                           const DenoiseConfig& cfg);

// Same update from scores that were evaluated already.
PointCloud tweedie_update(const PointCloud& cloud, std::span<const Vec3> scores,
                          double step_variance);

// E[X | Y = y] for a uniform prior over `clean_points` under N(0, sigma^2 I)
// noise, evaluated directly in extended precision.
Vec3 posterior_mean_oracle(const Vec3& y, const PointCloud& clean_points, double sigma_abs);

}  // namespace pcdn
