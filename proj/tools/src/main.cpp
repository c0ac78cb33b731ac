#include <iostream>

#include "CLI11.hpp"
#include "pcdn/parallel.hpp"
#include "pcdn/text.hpp"
#include "pcdn_cli/commands.hpp"

using namespace pcdn;
using namespace pcdn::cli;

namespace {

void add_tvpc_flags(CLI::App* cmd, TvpcConfig& tv, std::string& weight_mode) {
  cmd->add_option("--tv-k", tv.k, "TV_PC neighbor count")->capture_default_str();
  cmd->add_option("--tv-epsilon", tv.epsilon, "TV_PC smoothing epsilon")->capture_default_str();
  cmd->add_option("--tv-weights", weight_mode, "TV_PC edge weights: constant or gaussian")
      ->check(CLI::IsMember({"constant", "gaussian"}))
      ->capture_default_str();
  cmd->add_option("--tv-gaussian-scale", tv.gaussian_scale, "Gaussian edge weight scale")
      ->capture_default_str();
  cmd->add_flag("--tv-symmetric", tv.symmetric, "Count each unordered neighbor pair once");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pcdn: one-step point cloud denoising with score estimates"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));
  std::size_t threads = 0;
  app.add_option("--threads", threads, "Worker thread cap (0 = all cores)")->capture_default_str();

  AddNoiseOptions noise;
  auto* add_noise = app.add_subcommand("add-noise", "Corrupt a point cloud with synthetic noise");
  add_noise->add_option("in", noise.in, "Input cloud (.xyz or .ply)")->required();
  add_noise->add_option("out", noise.out, "Output cloud")->required();
  add_noise->add_option("--model", noise.model, "gaussian or lidar")->capture_default_str();
  add_noise->add_option("--level", noise.level, "Noise level as a fraction of the reference scale")
      ->capture_default_str();
  add_noise->add_option("--seed", noise.seed)->capture_default_str();
  add_noise->add_option("--lasers", noise.lidar_lasers, "LiDAR elevation bins")
      ->capture_default_str();
  add_noise->add_option("--bias-level", noise.lidar_bias_level,
                        "LiDAR per-laser bias std as a fraction of the bbox diagonal")
      ->capture_default_str();

  TrainOptions train;
  train.quiet = false;
  auto* train_cmd = app.add_subcommand("train", "Train the score network on a noisy cloud");
  train_cmd->add_option("in", train.in, "Noisy training cloud")->required();
  train_cmd->add_option("out_weights", train.out_weights, "Output weights file")->required();
  train_cmd->add_option("--epochs", train.config.epochs)->capture_default_str();
  train_cmd->add_option("--lr", train.config.learning_rate)->capture_default_str();
  train_cmd->add_option("--weight-decay", train.config.weight_decay)->capture_default_str();
  train_cmd->add_option("--sigma-max", train.config.sigma_max)->capture_default_str();
  train_cmd->add_option("--sigma-min", train.config.sigma_min)->capture_default_str();
  train_cmd->add_option("--batch", train.config.batch_points)->capture_default_str();
  train_cmd->add_option("--k-feat", train.config.k_feat)->capture_default_str();
  train_cmd->add_option("--hidden", train.config.hidden_width)->capture_default_str();
  train_cmd->add_option("--seed", train.config.seed)->capture_default_str();
  train_cmd->add_flag("--quiet", train.quiet, "Do not print per-epoch progress");

  DenoiseOptions den;
  std::string den_weights, den_bandwidth, den_ref_cloud, den_ref_mesh, den_tv_mode = "constant";
  double den_sigma = 0.0;
  bool no_loo = false;
  auto* denoise = app.add_subcommand("denoise", "One-step Tweedie denoising");
  denoise->add_option("in", den.in, "Noisy cloud")->required();
  denoise->add_option("out", den.out, "Denoised cloud")->required();
  auto* w_opt = denoise->add_option("--weights", den_weights, "Trained network weights");
  auto* h_opt = denoise->add_option("--kde-bandwidth", den_bandwidth,
                                    "KDE bandwidth in the normalized frame, or 'auto'");
  w_opt->excludes(h_opt);
  denoise->add_option("--kde-bandwidth-scale", den.kde_bandwidth_scale,
                      "Multiplier for the automatic KDE bandwidth")
      ->capture_default_str();
  denoise->add_flag("--no-leave-one-out", no_loo,
                    "Keep a point's own source in its KDE score");
  auto* s_opt = denoise->add_option("--sigma", den_sigma, "Noise std in the input's units");
  auto* e_opt = denoise->add_flag("--estimate-sigma", den.estimate_sigma,
                                  "Pick sigma by minimizing TV_PC");
  s_opt->excludes(e_opt);
  denoise->add_option("--sigma-lo", den.search.sigma_lo)->capture_default_str();
  denoise->add_option("--sigma-hi", den.search.sigma_hi)->capture_default_str();
  denoise->add_option("--sigma-tol", den.search.tolerance)->capture_default_str();
  denoise->add_option("--max-evals", den.search.max_evals)->capture_default_str();
  add_tvpc_flags(denoise, den.tvpc, den_tv_mode);
  denoise->add_option("--reference-cloud", den_ref_cloud, "Clean cloud for CD before/after");
  denoise->add_option("--reference-mesh", den_ref_mesh, "Clean mesh (.obj) for P2M before/after");

  EvalOptions ev;
  std::string ev_ref_cloud, ev_ref_mesh, ev_out;
  auto* eval = app.add_subcommand("eval", "Chamfer and point-to-mesh metrics");
  eval->add_option("denoised", ev.denoised, "Cloud to evaluate")->required();
  eval->add_option("--reference-cloud", ev_ref_cloud);
  eval->add_option("--reference-mesh", ev_ref_mesh, "Reference mesh (.obj)");
  eval->add_option("-o,--out", ev_out, "Metric report path (default <denoised>.metrics)");

  std::string bench_config;
  auto* bench = app.add_subcommand("bench", "Shapes x levels x seeds sweep and timing");
  bench->add_option("config", bench_config, "Bench config file ('# pcdn bench v1')")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  set_thread_count(threads);

  return run_guarded([&] {
    if (add_noise->parsed()) {
      const AddNoiseResult r = cmd_add_noise(noise);
      std::cout << "wrote " << noise.out.string() << " (" << r.noisy.size() << " points)\n";
    } else if (train_cmd->parsed()) {
      const TrainCommandResult r = cmd_train(train);
      std::cout << "wrote " << train.out_weights.string() << ", " << r.header_path.string()
                << ", " << r.loss_csv_path.string() << '\n';
    } else if (denoise->parsed()) {
      if (!den_weights.empty()) den.weights = den_weights;
      if (!den_bandwidth.empty()) den.kde_bandwidth = den_bandwidth;
      if (s_opt->count() > 0) den.sigma = den_sigma;
      if (!den_ref_cloud.empty()) den.reference_cloud = den_ref_cloud;
      if (!den_ref_mesh.empty()) den.reference_mesh = den_ref_mesh;
      den.kde_leave_one_out = !no_loo;
      den.tvpc.weight_mode = tv_weight_mode_from_string(den_tv_mode);
      const DenoiseCommandResult r = cmd_denoise(den);
      std::cout << "sigma " << format_double(r.pipeline.sigma_used * r.pipeline.transform.radius, 6)
                << " (" << r.report.at("sigma.source") << "), report " << r.report_path.string()
                << '\n';
    } else if (eval->parsed()) {
      if (!ev_ref_cloud.empty()) ev.reference_cloud = ev_ref_cloud;
      if (!ev_ref_mesh.empty()) ev.reference_mesh = ev_ref_mesh;
      if (!ev_out.empty()) ev.out = ev_out;
      const EvalCommandResult r = cmd_eval(ev);
      std::cout << "cd_x1e4 " << format_double(r.metrics.cd * kMetricDisplayScale, 6);
      if (r.metrics.p2m)
        std::cout << " p2m_x1e4 " << format_double(*r.metrics.p2m * kMetricDisplayScale, 6);
      std::cout << '\n';
    } else if (bench->parsed()) {
      const BenchResult r = cmd_bench(fs::path(bench_config));
      for (const BenchSummaryRow& s : r.summary)
        std::cout << s.shape << " level " << format_double(s.level) << " cd ratio "
                  << format_double(s.ratio_mean, 3) << " +- " << format_double(s.ratio_std, 2)
                  << " (" << s.runs << " runs)\n";
      if (r.timing)
        for (const auto& [stage, secs] : r.timing->stages())
          std::cout << "timing " << stage << ' ' << format_double(secs, 4) << " s\n";
    }
  });
}
