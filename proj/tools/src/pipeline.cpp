#include <cmath>

#include "pcdn/error.hpp"
#include "pcdn/score.hpp"
#include "pcdn/text.hpp"
#include "pcdn/tweedie.hpp"
#include "pcdn_cli/commands.hpp"

namespace pcdn::cli {

void StageTimer::start(std::string stage) {
  current_ = std::move(stage);
  began_ = std::chrono::steady_clock::now();
}

void StageTimer::stop() {
  const auto now = std::chrono::steady_clock::now();
  stages_.emplace_back(current_, std::chrono::duration<double>(now - began_).count());
  current_.clear();
}

double StageTimer::total() const {
  double t = 0.0;
  for (const auto& s : stages_) t += s.second;
  return t;
}

std::map<std::string, std::string> StageTimer::to_key_values() const {
  std::map<std::string, std::string> kv;
  for (const auto& [stage, secs] : stages_) kv["timing." + stage + "_s"] = format_double(secs, 6);
  kv["timing.total_s"] = format_double(total(), 6);
  return kv;
}

double auto_kde_bandwidth(const PointCloud& normalized, double scale) {
  if (!(scale > 0.0)) throw InvalidInput("KDE bandwidth scale must be positive");
  return scale * median_knn_distance(normalized, 16);
}

PipelineResult run_pipeline(const PointCloud& noisy, const PipelineOptions& opts) {
  if (opts.sigma.has_value() == opts.estimate_sigma)
    throw UsageError("give exactly one of a noise sigma or sigma estimation");
  if (opts.sigma && !(*opts.sigma > 0.0 && std::isfinite(*opts.sigma)))
    throw UsageError("sigma must be positive and finite");

  PipelineResult r;
  r.timer.start("normalize");
  auto [y, transform] = normalize_to_unit_sphere(noisy);
  r.transform = transform;
  r.timer.stop();

  r.timer.start("build_field");
  std::optional<ScoreField> field;
  if (opts.backend == Backend::kde) {
    const double h = opts.kde_bandwidth ? *opts.kde_bandwidth
                                        : auto_kde_bandwidth(y, opts.kde_bandwidth_scale);
    field.emplace(ScoreField::kde(y, h, opts.kde_neighbors, opts.kde_leave_one_out));
    r.bandwidth = h;
  } else {
    if (!opts.weights || !opts.weights_header)
      throw UsageError("network backend needs weights and their header");
    field.emplace(NetworkScore(*opts.weights, y, opts.weights_header->config.k_feat,
                               opts.weights_header->feature_scale));
  }
  r.kernel_variance = field->kernel_variance();
  r.timer.stop();

  r.timer.start("score_evaluation");
  const std::vector<Vec3> scores = field->evaluate(y.points());
  r.timer.stop();

  if (opts.estimate_sigma) {
    r.timer.start("sigma_search");
    r.estimate = estimate_sigma(y, scores, opts.tvpc, opts.search, r.kernel_variance);
    r.sigma_used = r.estimate->sigma_star;
    r.timer.stop();
  } else {
    r.sigma_used = *opts.sigma / transform.radius;
  }

  r.timer.start("tweedie_update");
  const PointCloud x = tweedie_update(
      y, scores, DenoiseConfig{r.sigma_used, r.kernel_variance}.step_variance());
  r.timer.stop();

  r.timer.start("tvpc");
  r.tvpc_before = tv_pc(y, opts.tvpc);
  r.tvpc_after = tv_pc(x, opts.tvpc);
  r.timer.stop();

  r.timer.start("denormalize");
  r.denoised = transform.invert(x);
  r.timer.stop();
  return r;
}

}  // namespace pcdn::cli
