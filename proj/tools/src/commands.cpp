#include <iostream>

#include "pcdn/error.hpp"
#include "pcdn/io.hpp"
#include "pcdn/sampling.hpp"
#include "pcdn/shapes.hpp"
#include "pcdn/text.hpp"
#include "pcdn_cli/commands.hpp"

namespace pcdn::cli {
namespace {

fs::path with_suffix(const fs::path& p, const std::string& suffix) {
  return fs::path(p.string() + suffix);
}

PointCloud load_cloud(const fs::path& path) { return io::read_point_cloud(path); }

std::map<std::string, std::string> prefixed(const std::map<std::string, std::string>& kv,
                                            const std::string& prefix) {
  std::map<std::string, std::string> out;
  for (const auto& [k, v] : kv) out[prefix + k] = v;
  return out;
}

}  // namespace

int run_guarded(const std::function<void()>& body) {
  try {
    body();
    return kExitOk;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kExitData;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitData;
  } catch (const InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
}

TriangleMesh fixture_mesh(const std::string& shape) {
  TriangleMesh mesh;
  try {
    mesh = shapes::by_name(shape);
  } catch (const InvalidInput& e) {
    throw UsageError(e.what());
  }
  return unit_sphere_transform(mesh.vertices()).apply(mesh);
}

PointCloud fixture_cloud(const std::string& shape, std::size_t points, std::uint64_t seed) {
  return sample_mesh(fixture_mesh(shape), points, seed, SamplingMode::blue_noise);
}

// ------------------------------------------------------------- add-noise --

AddNoiseResult cmd_add_noise(const AddNoiseOptions& opts) {
  NoiseSpec spec;
  try {
    spec.kind = noise_kind_from_string(opts.model);
  } catch (const InvalidInput&) {
    throw UsageError("unknown noise model '" + opts.model + "' (expected gaussian or lidar)");
  }
  spec.level = opts.level;
  spec.seed = opts.seed;
  spec.lidar_lasers = opts.lidar_lasers;
  spec.lidar_bias_level = opts.lidar_bias_level;
  try {
    spec.validate();
  } catch (const InvalidInput& e) {
    throw UsageError(e.what());
  }

  const PointCloud clean = load_cloud(opts.in);
  AddNoiseResult r;
  if (spec.kind == NoiseKind::gaussian) {
    auto g = add_gaussian_noise(clean, spec);
    r.noisy = std::move(g.cloud);
    r.sigma_abs = g.sigma_abs;
  } else {
    r.noisy = add_lidar_noise(clean, spec);
  }
  io::write_point_cloud(opts.out, r.noisy);

  r.manifest.command = "add-noise";
  r.manifest.inputs["cloud"] = opts.in.string();
  r.manifest.outputs["cloud"] = opts.out.string();
  r.manifest.noise = spec;
  if (spec.kind == NoiseKind::gaussian) r.manifest.sigma_abs = r.sigma_abs;
  r.manifest.to_document().write(with_suffix(opts.out, ".manifest"));
  return r;
}

// ----------------------------------------------------------------- train --

TrainCommandResult cmd_train(const TrainOptions& opts) {
  try {
    opts.config.validate();
  } catch (const InvalidInput& e) {
    throw UsageError(e.what());
  }
  const PointCloud cloud = load_cloud(opts.in);
  const auto [normalized, transform] = normalize_to_unit_sphere(cloud);

  TrainCommandResult r;
  const std::size_t every = std::max<std::size_t>(1, opts.config.epochs / 20);
  r.trained = train_score_network(
      normalized, opts.config, [&](std::size_t epoch, double sigma_t, double loss) {
        if (!opts.quiet && (epoch % every == 0 || epoch + 1 == opts.config.epochs))
          std::cerr << "epoch " << epoch << " sigma_t " << format_double(sigma_t, 4) << " loss "
                    << format_double(loss, 6) << '\n';
      });

  io::write_weights(opts.out_weights, r.trained.weights);
  r.header_path = weights_header_path(opts.out_weights);
  WeightsHeader{opts.config, r.trained.feature_scale}.to_document().write(r.header_path);

  r.loss_csv_path = with_suffix(opts.out_weights, ".loss.csv");
  std::vector<std::vector<std::string>> rows;
  for (std::size_t e = 0; e < r.trained.epoch_loss.size(); ++e)
    rows.push_back({std::to_string(e), format_double(r.trained.epoch_sigma[e]),
                    format_double(r.trained.epoch_loss[e])});
  io::write_csv(r.loss_csv_path, {"epoch", "sigma_t", "loss"}, rows);

  r.manifest.command = "train";
  r.manifest.inputs["cloud"] = opts.in.string();
  r.manifest.outputs["weights"] = opts.out_weights.string();
  r.manifest.outputs["weights_header"] = r.header_path.string();
  r.manifest.outputs["loss_curve"] = r.loss_csv_path.string();
  r.manifest.train = opts.config;
  r.manifest.extra["feature_scale"] = format_double(r.trained.feature_scale);
  r.manifest.extra["normalize.radius"] = format_double(transform.radius);
  r.manifest.to_document().write(with_suffix(opts.out_weights, ".manifest"));
  return r;
}

// --------------------------------------------------------------- denoise --

DenoiseCommandResult cmd_denoise(const DenoiseOptions& opts) {
  if (opts.weights.has_value() == opts.kde_bandwidth.has_value())
    throw UsageError("give exactly one of --weights or --kde-bandwidth");
  if (opts.sigma.has_value() == opts.estimate_sigma)
    throw UsageError("give exactly one of --sigma or --estimate-sigma");
  try {
    opts.tvpc.validate();
    opts.search.validate();
  } catch (const InvalidInput& e) {
    throw UsageError(e.what());
  }

  PipelineOptions p;
  p.sigma = opts.sigma;
  p.estimate_sigma = opts.estimate_sigma;
  p.tvpc = opts.tvpc;
  p.search = opts.search;
  p.kde_leave_one_out = opts.kde_leave_one_out;
  p.kde_bandwidth_scale = opts.kde_bandwidth_scale;
  if (opts.kde_bandwidth) {
    p.backend = Backend::kde;
    if (*opts.kde_bandwidth != "auto") {
      double h = 0.0;
      try {
        h = parse_double(*opts.kde_bandwidth);
      } catch (const ParseError&) {
        throw UsageError("--kde-bandwidth expects a number or 'auto'");
      }
      if (!(h > 0.0)) throw UsageError("--kde-bandwidth must be positive");
      p.kde_bandwidth = h;
    }
  } else {
    p.backend = Backend::network;
    p.weights = io::read_weights(*opts.weights);
    p.weights_header =
        WeightsHeader::from_document(KeyValueDocument::read(weights_header_path(*opts.weights)));
    if (p.weights->hidden() != p.weights_header->config.hidden_width)
      throw ParseError("weights do not match the hidden width in their header");
  }

  const PointCloud noisy = load_cloud(opts.in);
  std::optional<TriangleMesh> ref_mesh;
  std::optional<PointCloud> ref_cloud;
  if (opts.reference_mesh) ref_mesh = io::read_mesh(*opts.reference_mesh).mesh;
  if (opts.reference_cloud) ref_cloud = load_cloud(*opts.reference_cloud);

  DenoiseCommandResult r;
  r.pipeline = run_pipeline(noisy, p);
  const PipelineResult& pr = r.pipeline;
  io::write_point_cloud(opts.out, pr.denoised);

  const fs::path manifest_path = with_suffix(opts.out, ".manifest");
  r.report_path = with_suffix(opts.out, ".report");

  RunManifest& m = r.manifest;
  m.command = "denoise";
  m.inputs["cloud"] = opts.in.string();
  if (opts.reference_cloud) m.inputs["reference_cloud"] = opts.reference_cloud->string();
  if (opts.reference_mesh) m.inputs["reference_mesh"] = opts.reference_mesh->string();
  m.outputs["cloud"] = opts.out.string();
  m.outputs["report"] = r.report_path.string();
  if (opts.weights) m.weights_path = opts.weights->string();
  if (pr.bandwidth) m.kde_bandwidth = *pr.bandwidth;
  if (opts.sigma) m.sigma_abs = *opts.sigma;
  m.kernel_variance = pr.kernel_variance;
  m.tvpc = opts.tvpc;
  m.extra["backend"] = p.backend == Backend::kde ? "kde" : "network";
  m.extra["sigma_mode"] = opts.estimate_sigma ? "estimate" : "given";
  if (p.backend == Backend::kde) {
    m.extra["kde.bandwidth_request"] = *opts.kde_bandwidth;
    m.extra["kde.bandwidth_scale"] = format_double(opts.kde_bandwidth_scale);
    m.extra["kde.leave_one_out"] = opts.kde_leave_one_out ? "true" : "false";
    m.extra["kde.max_neighbors"] = std::to_string(p.kde_neighbors);
  }
  if (opts.estimate_sigma) {
    m.extra["search.sigma_lo"] = format_double(opts.search.sigma_lo);
    m.extra["search.sigma_hi"] = format_double(opts.search.sigma_hi);
    m.extra["search.tolerance"] = format_double(opts.search.tolerance);
    m.extra["search.max_evals"] = std::to_string(opts.search.max_evals);
    m.extra["search.grid_points"] = std::to_string(opts.search.grid_points);
    r.curve_path = with_suffix(opts.out, ".curve.csv");
    m.outputs["curve"] = r.curve_path->string();
  }
  m.to_document().write(manifest_path);

  KeyValueDocument& rep = r.report;
  rep.kind = "denoise-report";
  rep.entries["manifest"] = manifest_path.string();
  rep.entries["backend"] = m.extra["backend"];
  rep.entries["points"] = std::to_string(noisy.size());
  rep.entries["normalize.center"] = format_double(pr.transform.center.x) + " " +
                                    format_double(pr.transform.center.y) + " " +
                                    format_double(pr.transform.center.z);
  rep.entries["normalize.radius"] = format_double(pr.transform.radius);
  rep.entries["sigma.source"] = opts.estimate_sigma ? "estimated" : "given";
  rep.entries["sigma.input_frame"] = format_double(pr.sigma_used * pr.transform.radius);
  rep.entries["sigma.normalized"] = format_double(pr.sigma_used);
  rep.entries["step.kernel_variance"] = format_double(pr.kernel_variance);
  if (pr.bandwidth) rep.entries["kde.bandwidth"] = format_double(*pr.bandwidth);
  rep.entries["tvpc.before"] = format_double(pr.tvpc_before);
  rep.entries["tvpc.after"] = format_double(pr.tvpc_after);
  rep.merge(opts.tvpc.to_key_values());
  if (pr.estimate) {
    rep.entries["estimate.sigma_star"] = format_double(pr.estimate->sigma_star);
    rep.entries["estimate.flat"] = pr.estimate->flat ? "true" : "false";
    rep.entries["estimate.unimodal"] = pr.estimate->unimodal ? "true" : "false";
    rep.entries["estimate.evaluations"] = std::to_string(pr.estimate->evaluations);
    rep.entries["estimate.curve"] = r.curve_path->string();
    std::vector<std::vector<std::string>> rows;
    for (const SigmaCurvePoint& c : pr.estimate->curve)
      rows.push_back({format_double(c.sigma), format_double(c.tvpc)});
    io::write_csv(*r.curve_path, {"sigma", "tvpc"}, rows);
  }
  if (ref_mesh || ref_cloud) {
    const auto before = ref_mesh ? evaluate_against_mesh(noisy, *ref_mesh, ref_cloud ? &*ref_cloud : nullptr)
                                 : evaluate_against_cloud(noisy, *ref_cloud);
    const auto after = ref_mesh ? evaluate_against_mesh(pr.denoised, *ref_mesh, ref_cloud ? &*ref_cloud : nullptr)
                                : evaluate_against_cloud(pr.denoised, *ref_cloud);
    rep.merge(prefixed(before.to_key_values(), "before."));
    rep.merge(prefixed(after.to_key_values(), "after."));
  }
  rep.merge(pr.timer.to_key_values());
  rep.write(r.report_path);
  return r;
}

// ------------------------------------------------------------------ eval --

EvalCommandResult cmd_eval(const EvalOptions& opts) {
  if (!opts.reference_cloud && !opts.reference_mesh)
    throw UsageError("give --reference-cloud or --reference-mesh");
  const PointCloud result = load_cloud(opts.denoised);
  EvalCommandResult r;
  if (opts.reference_mesh) {
    const TriangleMesh mesh = io::read_mesh(*opts.reference_mesh).mesh;
    std::optional<PointCloud> ref;
    if (opts.reference_cloud) ref = load_cloud(*opts.reference_cloud);
    r.metrics = evaluate_against_mesh(result, mesh, ref ? &*ref : nullptr);
  } else {
    r.metrics = evaluate_against_cloud(result, load_cloud(*opts.reference_cloud));
  }
  r.report_path = opts.out ? *opts.out : with_suffix(opts.denoised, ".metrics");
  KeyValueDocument doc{"metrics", 1, {}};
  doc.entries["input.cloud"] = opts.denoised.string();
  if (opts.reference_cloud) doc.entries["input.reference_cloud"] = opts.reference_cloud->string();
  if (opts.reference_mesh) doc.entries["input.reference_mesh"] = opts.reference_mesh->string();
  doc.entries["tool_version"] = kToolVersion;
  doc.merge(r.metrics.to_key_values());
  doc.write(r.report_path);
  return r;
}

}  // namespace pcdn::cli
