#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pcdn/geometry.hpp"
#include "pcdn/io.hpp"
#include "pcdn/manifest.hpp"
#include "pcdn/metrics.hpp"
#include "pcdn/noise.hpp"
#include "pcdn/score.hpp"
#include "pcdn/training.hpp"
#include "pcdn/tvpc.hpp"

namespace pcdn::cli {

namespace fs = std::filesystem;

// Bad flag combinations or values. Mapped to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitData = 3, kExitNumeric = 4 };

// Runs `body`, printing any error to stderr and translating it to an exit code.
int run_guarded(const std::function<void()>& body);

// Ordered list of (stage, seconds).
class StageTimer {
 public:
  void start(std::string stage);
  void stop();
  const std::vector<std::pair<std::string, double>>& stages() const noexcept { return stages_; }
  double total() const;
  std::map<std::string, std::string> to_key_values() const;

 private:
  std::vector<std::pair<std::string, double>> stages_;
  std::string current_;
  std::chrono::steady_clock::time_point began_;
};

// ---------------------------------------------------------------- pipeline --

enum class Backend { kde, network };

struct PipelineOptions {
  Backend backend = Backend::kde;

  // KDE: explicit bandwidth in the normalized frame, or nullopt for
  // kde_bandwidth_scale * (median mean distance to the 16 nearest points).
  std::optional<double> kde_bandwidth;
  double kde_bandwidth_scale = 1.0;
  std::size_t kde_neighbors = KdeScore::kDefaultNeighbors;
  bool kde_leave_one_out = true;

  // Network: trained weights and their header.
  std::optional<NetworkWeights> weights;
  std::optional<WeightsHeader> weights_header;

  // Exactly one of `sigma` (input frame) or `estimate_sigma`.
  std::optional<double> sigma;
  bool estimate_sigma = false;
  TvpcConfig tvpc;
  SigmaSearchConfig search;
};

struct PipelineResult {
  PointCloud denoised;          // original frame of the input
  SphereTransform transform;    // input frame -> normalized frame
  double sigma_used = 0.0;      // normalized frame; input frame is sigma_used * transform.radius
  double kernel_variance = 0.0;
  std::optional<double> bandwidth;
  std::optional<SigmaEstimate> estimate;
  double tvpc_before = 0.0;     // normalized frame
  double tvpc_after = 0.0;
  StageTimer timer;
};

// Normalize, build the score field, pick sigma, apply the one-step update and
// map back to the input frame.
PipelineResult run_pipeline(const PointCloud& noisy, const PipelineOptions& opts);

// Auto KDE bandwidth for an already normalized cloud.
double auto_kde_bandwidth(const PointCloud& normalized, double scale);

// ---------------------------------------------------------------- commands --

struct AddNoiseOptions {
  fs::path in;
  fs::path out;
  std::string model = "gaussian";
  double level = 0.01;
  std::uint64_t seed = 0;
  std::size_t lidar_lasers = 64;
  double lidar_bias_level = 0.005;
};

struct AddNoiseResult {
  PointCloud noisy;
  double sigma_abs = 0.0;  // gaussian only, input frame
  RunManifest manifest;
};

AddNoiseResult cmd_add_noise(const AddNoiseOptions& opts);

struct TrainOptions {
  fs::path in;
  fs::path out_weights;
  TrainConfig config;
  bool quiet = true;
};

struct TrainCommandResult {
  TrainResult trained;
  RunManifest manifest;
  fs::path header_path;
  fs::path loss_csv_path;
};

TrainCommandResult cmd_train(const TrainOptions& opts);

struct DenoiseOptions {
  fs::path in;
  fs::path out;
  std::optional<fs::path> weights;
  std::optional<std::string> kde_bandwidth;  // number or "auto"
  double kde_bandwidth_scale = 1.0;
  bool kde_leave_one_out = true;
  std::optional<double> sigma;
  bool estimate_sigma = false;
  TvpcConfig tvpc;
  SigmaSearchConfig search;
  std::optional<fs::path> reference_cloud;
  std::optional<fs::path> reference_mesh;
};

struct DenoiseCommandResult {
  PipelineResult pipeline;
  KeyValueDocument report;
  RunManifest manifest;
  fs::path report_path;
  std::optional<fs::path> curve_path;
};

DenoiseCommandResult cmd_denoise(const DenoiseOptions& opts);

struct EvalOptions {
  fs::path denoised;
  std::optional<fs::path> reference_cloud;
  std::optional<fs::path> reference_mesh;
  std::optional<fs::path> out;  // report path; default "<denoised>.metrics"
};

struct EvalCommandResult {
  MetricReport metrics;
  fs::path report_path;
};

EvalCommandResult cmd_eval(const EvalOptions& opts);

// Benchmark harness configuration, read from a key=value file
// ("# pcdn bench v1").
struct BenchConfig {
  std::vector<std::string> shapes{"sphere", "torus"};
  std::vector<double> levels{0.01, 0.02, 0.03};
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::size_t points = 10000;
  std::uint64_t sample_seed = 1;
  std::string noise_model = "gaussian";
  Backend backend = Backend::kde;
  double kde_bandwidth_scale = 1.0;
  std::optional<fs::path> weights;
  bool estimate_sigma = false;
  bool timing = false;
  std::size_t timing_points = 50000;
  fs::path output = "bench";

  static BenchConfig from_document(const KeyValueDocument& doc);
  KeyValueDocument to_document() const;
};

struct BenchRow {
  std::string shape;
  double level = 0.0;
  std::uint64_t seed = 0;
  double sigma_used = 0.0;
  double cd_noisy = 0.0;
  double cd_denoised = 0.0;
  double p2m_noisy = 0.0;
  double p2m_denoised = 0.0;
  double seconds = 0.0;

  double cd_ratio() const { return cd_denoised / cd_noisy; }
};

struct BenchSummaryRow {
  std::string shape;
  double level = 0.0;
  std::size_t runs = 0;
  double ratio_mean = 0.0;
  double ratio_std = 0.0;
  double cd_noisy_mean = 0.0;
  double cd_denoised_mean = 0.0;
  double p2m_denoised_mean = 0.0;
};

struct BenchResult {
  std::vector<BenchRow> rows;
  std::vector<BenchSummaryRow> summary;
  std::optional<StageTimer> timing;
  fs::path rows_path;
  fs::path summary_path;
  std::optional<fs::path> timing_path;
};

BenchResult cmd_bench(const BenchConfig& cfg);
BenchResult cmd_bench(const fs::path& config_path);

// Clean fixture cloud for a bundled shape: blue-noise samples of the shape's
// mesh, normalized with the mesh vertices' unit-sphere transform.
PointCloud fixture_cloud(const std::string& shape, std::size_t points, std::uint64_t seed = 1);
TriangleMesh fixture_mesh(const std::string& shape);

}  // namespace pcdn::cli
