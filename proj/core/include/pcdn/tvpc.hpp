#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pcdn/geometry.hpp"
#include "pcdn/score.hpp"

namespace pcdn {

enum class TvWeightMode { constant, gaussian };

std::string to_string(TvWeightMode mode);
TvWeightMode tv_weight_mode_from_string(const std::string& name);  // throws InvalidInput

struct TvpcConfig {
  std::size_t k = 4;
  double epsilon = 1e-4;
  TvWeightMode weight_mode = TvWeightMode::constant;
  double gaussian_scale = 0.01;  // kernel std when weight_mode == gaussian
  // false: sum over directed kNN edges (i -> j for j in kNN(i)).
  // true: sum over the union of kNN edges, each unordered pair once.
  bool symmetric = false;

  void validate() const;
  std::map<std::string, std::string> to_key_values() const;
  static TvpcConfig from_key_values(const std::map<std::string, std::string>& kv);
};

// sum_i sum_{j in kNN(i)} w_ij sqrt(|p_i - p_j|^2 + eps^2), self excluded.
// Requires at least two points.
double tv_pc(const PointCloud& cloud, const TvpcConfig& cfg = {});

struct SigmaSearchConfig {
  double sigma_lo = 1e-3;
  double sigma_hi = 0.1;
  double tolerance = 1e-4;
  std::size_t max_evals = 60;
  std::size_t grid_points = 20;

  void validate() const;
};

struct SigmaCurvePoint {
  double sigma = 0.0;
  double tvpc = 0.0;
};

struct SigmaEstimate {
  double sigma_star = 0.0;
  std::vector<SigmaCurvePoint> curve;  // every evaluation, sorted by sigma
  bool flat = false;                   // g constant on the bracket
  bool unimodal = true;                // grid pre-scan found one basin
  std::size_t evaluations = 0;
};

// Minimizes g(sigma) = tv_pc(y + (sigma^2 + kernel_variance) S(y)) over
// [sigma_lo, sigma_hi]. A log-spaced grid pre-scan checks unimodality; if it
// holds, golden-section search on log sigma refines the basin around the grid
// minimum, otherwise the best grid point is returned. The returned sigma* is
// the minimizer over every evaluated point.
SigmaEstimate estimate_sigma(const PointCloud& cloud, std::span<const Vec3> scores,
                             const TvpcConfig& tvcfg, const SigmaSearchConfig& scfg,
                             double kernel_variance = 0.0);

// Evaluates the field once, then searches as above.
SigmaEstimate estimate_sigma(const PointCloud& cloud, const ScoreField& field,
                             const TvpcConfig& tvcfg, const SigmaSearchConfig& scfg,
                             double kernel_variance = 0.0);

}  // namespace pcdn
