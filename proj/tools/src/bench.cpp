#include <cmath>
#include <iostream>

#include "pcdn/error.hpp"
#include "pcdn/io.hpp"
#include "pcdn/parallel.hpp"
#include "pcdn/sampling.hpp"
#include "pcdn/shapes.hpp"
#include "pcdn/text.hpp"
#include "pcdn_cli/commands.hpp"

namespace pcdn::cli {
namespace {

template <class T, class Parse>
std::vector<T> parse_list(const std::string& text, Parse parse) {
  std::vector<T> out;
  for (std::string_view item : split(text, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse(item));
  }
  return out;
}

template <class T, class Fmt>
std::string join(const std::vector<T>& values, Fmt fmt) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += fmt(values[i]);
  }
  return out;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw UsageError("expected true or false, got '" + v + "'");
}

std::string fmt(double v) { return format_double(v, 9); }

}  // namespace

BenchConfig BenchConfig::from_document(const KeyValueDocument& doc) {
  if (doc.kind != "bench") throw UsageError("bench config must start with '# pcdn bench v1'");
  BenchConfig c;
  const auto& e = doc.entries;
  try {
    for (const auto& [key, value] : e) {
      if (key == "shapes")
        c.shapes = parse_list<std::string>(value, [](std::string_view s) { return std::string(s); });
      else if (key == "levels")
        c.levels = parse_list<double>(value, [](std::string_view s) { return parse_double(s); });
      else if (key == "seeds")
        c.seeds = parse_list<std::uint64_t>(value, [](std::string_view s) { return parse_u64(s); });
      else if (key == "points")
        c.points = parse_u64(value);
      else if (key == "sample_seed")
        c.sample_seed = parse_u64(value);
      else if (key == "noise_model")
        c.noise_model = value;
      else if (key == "backend") {
        if (value == "kde") c.backend = Backend::kde;
        else if (value == "network") c.backend = Backend::network;
        else throw UsageError("backend must be kde or network");
      } else if (key == "kde_bandwidth_scale")
        c.kde_bandwidth_scale = parse_double(value);
      else if (key == "weights")
        c.weights = value;
      else if (key == "estimate_sigma")
        c.estimate_sigma = parse_bool(value);
      else if (key == "timing")
        c.timing = parse_bool(value);
      else if (key == "timing_points")
        c.timing_points = parse_u64(value);
      else if (key == "output")
        c.output = value;
      else
        throw UsageError("unknown bench config key '" + key + "'");
    }
  } catch (const ParseError& err) {
    throw UsageError(std::string("bad bench config value: ") + err.what());
  }
  return c;
}

KeyValueDocument BenchConfig::to_document() const {
  KeyValueDocument d{"bench", 1, {}};
  d.entries["shapes"] = join(shapes, [](const std::string& s) { return s; });
  d.entries["levels"] = join(levels, [](double v) { return format_double(v); });
  d.entries["seeds"] = join(seeds, [](std::uint64_t v) { return std::to_string(v); });
  d.entries["points"] = std::to_string(points);
  d.entries["sample_seed"] = std::to_string(sample_seed);
  d.entries["noise_model"] = noise_model;
  d.entries["backend"] = backend == Backend::kde ? "kde" : "network";
  d.entries["kde_bandwidth_scale"] = format_double(kde_bandwidth_scale);
  if (weights) d.entries["weights"] = weights->string();
  d.entries["estimate_sigma"] = estimate_sigma ? "true" : "false";
  d.entries["timing"] = timing ? "true" : "false";
  d.entries["timing_points"] = std::to_string(timing_points);
  d.entries["output"] = output.string();
  return d;
}

BenchResult cmd_bench(const fs::path& config_path) {
  return cmd_bench(BenchConfig::from_document(KeyValueDocument::read(config_path)));
}

BenchResult cmd_bench(const BenchConfig& cfg) {
  if (cfg.shapes.empty()) throw UsageError("bench config lists no shapes");
  if (cfg.levels.empty() && !cfg.timing) throw UsageError("bench config lists no noise levels");
  if (cfg.seeds.empty() && !cfg.timing) throw UsageError("bench config lists no seeds");
  if (cfg.points < 16) throw UsageError("bench needs at least 16 points per shape");
  for (const std::string& s : cfg.shapes) (void)fixture_mesh(s);  // rejects unknown names
  NoiseKind kind;
  try {
    kind = noise_kind_from_string(cfg.noise_model);
  } catch (const InvalidInput&) {
    throw UsageError("unknown noise model '" + cfg.noise_model + "'");
  }
  for (double level : cfg.levels)
    if (!(level > 0.0)) throw UsageError("noise levels must be positive");

  PipelineOptions base;
  base.backend = cfg.backend;
  base.kde_bandwidth_scale = cfg.kde_bandwidth_scale;
  base.estimate_sigma = cfg.estimate_sigma;
  if (cfg.backend == Backend::network) {
    if (!cfg.weights) throw UsageError("network backend needs 'weights' in the bench config");
    base.weights = io::read_weights(*cfg.weights);
    base.weights_header =
        WeightsHeader::from_document(KeyValueDocument::read(weights_header_path(*cfg.weights)));
  }

  BenchResult result;
  for (const std::string& shape : cfg.shapes) {
    const TriangleMesh mesh = fixture_mesh(shape);
    const PointCloud clean = sample_mesh(mesh, cfg.points, cfg.sample_seed, SamplingMode::blue_noise);
    const BoundingScales scales = bounding_scales(clean);
    for (double level : cfg.levels) {
      BenchSummaryRow summary{shape, level, 0, 0.0, 0.0, 0.0, 0.0, 0.0};
      std::vector<double> ratios;
      for (std::uint64_t seed : cfg.seeds) {
        NoiseSpec spec;
        spec.kind = kind;
        spec.level = level;
        spec.seed = seed;
        const PointCloud noisy = add_noise(clean, spec);
        PipelineOptions p = base;
        if (!cfg.estimate_sigma)
          p.sigma = kind == NoiseKind::gaussian ? level * scales.sphere_radius
                                                : level * scales.bbox_diagonal;
        const auto t0 = std::chrono::steady_clock::now();
        const PipelineResult pr = run_pipeline(noisy, p);
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const MetricReport before = evaluate_against_mesh(noisy, mesh, &clean);
        const MetricReport after = evaluate_against_mesh(pr.denoised, mesh, &clean);
        BenchRow row{shape,     level,     seed,         pr.sigma_used * pr.transform.radius,
                     before.cd, after.cd, *before.p2m, *after.p2m,
                     secs};
        ratios.push_back(row.cd_ratio());
        summary.cd_noisy_mean += row.cd_noisy;
        summary.cd_denoised_mean += row.cd_denoised;
        summary.p2m_denoised_mean += row.p2m_denoised;
        result.rows.push_back(row);
      }
      const double n = static_cast<double>(ratios.size());
      summary.runs = ratios.size();
      for (double r : ratios) summary.ratio_mean += r / n;
      for (double r : ratios) summary.ratio_std += (r - summary.ratio_mean) * (r - summary.ratio_mean);
      summary.ratio_std = ratios.size() > 1 ? std::sqrt(summary.ratio_std / (n - 1.0)) : 0.0;
      summary.cd_noisy_mean /= n;
      summary.cd_denoised_mean /= n;
      summary.p2m_denoised_mean /= n;
      if (!ratios.empty()) result.summary.push_back(summary);
    }
  }

  const std::string stem = cfg.output.string();
  if (!cfg.output.parent_path().empty()) fs::create_directories(cfg.output.parent_path());
  result.rows_path = stem + "_rows.csv";
  result.summary_path = stem + "_summary.csv";
  std::vector<std::vector<std::string>> rows;
  for (const BenchRow& r : result.rows)
    rows.push_back({r.shape, fmt(r.level), std::to_string(r.seed), fmt(r.sigma_used),
                    fmt(r.cd_noisy * kMetricDisplayScale), fmt(r.cd_denoised * kMetricDisplayScale),
                    fmt(r.cd_ratio()), fmt(r.p2m_noisy * kMetricDisplayScale),
                    fmt(r.p2m_denoised * kMetricDisplayScale), format_double(r.seconds, 4)});
  io::write_csv(result.rows_path,
                {"shape", "level", "seed", "sigma", "cd_noisy_x1e4", "cd_denoised_x1e4", "cd_ratio",
                 "p2m_noisy_x1e4", "p2m_denoised_x1e4", "seconds"},
                rows);
  rows.clear();
  for (const BenchSummaryRow& s : result.summary)
    rows.push_back({s.shape, fmt(s.level), std::to_string(s.runs), fmt(s.ratio_mean),
                    fmt(s.ratio_std), format_double(s.ratio_mean, 3) + " +- " + format_double(s.ratio_std, 2),
                    fmt(s.cd_noisy_mean * kMetricDisplayScale),
                    fmt(s.cd_denoised_mean * kMetricDisplayScale),
                    fmt(s.p2m_denoised_mean * kMetricDisplayScale)});
  io::write_csv(result.summary_path,
                {"shape", "level", "runs", "cd_ratio_mean", "cd_ratio_std", "cd_ratio",
                 "cd_noisy_mean_x1e4", "cd_denoised_mean_x1e4", "p2m_denoised_mean_x1e4"},
                rows);

  if (cfg.timing) {
    const std::string& shape = cfg.shapes.front();
    const PointCloud clean = fixture_cloud(shape, cfg.timing_points, cfg.sample_seed);
    NoiseSpec spec;
    spec.level = 0.02;
    auto g = add_gaussian_noise(clean, spec);
    PipelineOptions p = base;
    p.estimate_sigma = false;
    p.sigma = g.sigma_abs;
    const PipelineResult pr = run_pipeline(g.cloud, p);
    result.timing = pr.timer;
    KeyValueDocument doc{"bench-timing", 1, {}};
    doc.entries["shape"] = shape;
    doc.entries["points"] = std::to_string(cfg.timing_points);
    doc.entries["backend"] = cfg.backend == Backend::kde ? "kde" : "network";
    doc.entries["threads"] = std::to_string(thread_count());
    doc.merge(pr.timer.to_key_values());
    result.timing_path = stem + "_timing.txt";
    doc.write(*result.timing_path);
  }
  cfg.to_document().write(fs::path(stem + ".manifest"));
  return result;
}

}  // namespace pcdn::cli
