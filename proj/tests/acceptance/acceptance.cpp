// Acceptance suite: one line per criterion, "[PASS]" or "[FAIL]", followed by
// the measured quantities and the wall-clock time of the check.
//
// The process exits 0 once every check has run, whatever the verdicts, so a
// failed criterion is reported without hiding the others. Pass --strict to
// get a non-zero exit code when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "oracles.hpp"
#include "pcdn/io.hpp"
#include "pcdn/metrics.hpp"
#include "pcdn/noise.hpp"
#include "pcdn/score.hpp"
#include "pcdn/tvpc.hpp"
#include "pcdn/tweedie.hpp"
#include "pcdn_cli/commands.hpp"

using namespace pcdn;
using namespace pcdn::cli;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ------------------------------------------------------------------ C1 --

Verdict tweedie_exactness() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> size(5, 200);
  std::normal_distribution<double> g;
  double worst = 0;
  std::size_t queries = 0;
  for (int prior_no = 0; prior_no < 20; ++prior_no) {
    const PointCloud prior = oracle::random_cloud(size(rng), 100 + prior_no);
    for (double sigma : {0.05, 0.1, 0.3, 1.0}) {
      std::vector<Vec3> q;
      for (std::size_t i = 0; i < 100; ++i)
        q.push_back(prior[i % prior.size()] + Vec3{g(rng), g(rng), g(rng)} * sigma);
      const PointCloud y(q);
      const PointCloud x =
          tweedie_denoise(y, ScoreField::gaussian_mixture(prior, sigma), {sigma, 0.0});
      for (std::size_t i = 0; i < y.size(); ++i)
        worst = std::max(worst, distance(x[i], posterior_mean_oracle(y[i], prior, sigma)));
      queries += y.size();
    }
  }
  return {worst <= 1e-9, "max |tweedie - posterior mean| = " + fmt(worst, 3) + " over " +
                             std::to_string(queries) + " queries (bound 1e-9)"};
}

// ------------------------------------------------------------------ C2 --

Verdict score_correctness() {
  // KDE: default 64-neighbor field against finite differences of the full
  // log-density on 100 queries.
  const auto src = oracle::random_points(100, 7);
  const double h = 0.1;
  const ScoreField kde = kde_score(PointCloud(src), h);
  double kde_worst = 0;
  for (const Vec3& q : oracle::random_points(100, 8, -0.9, 0.9)) {
    const Vec3 fd = oracle::fd_log_kde_gradient(src, q, h, 1e-5);
    kde_worst = std::max(kde_worst, distance(kde.evaluate(q), fd) / norm(fd));
  }

  // Network: every parameter of three tiny configurations.
  double net_worst = 0;
  struct Tiny {
    std::size_t hidden, k, batch;
    std::uint64_t seed;
  };
  for (const Tiny& t : {Tiny{4, 3, 5, 1}, Tiny{5, 4, 3, 2}, Tiny{3, 2, 6, 3}}) {
    // Biases are drawn too, so no pre-activation sits exactly on a ReLU kink.
    NetworkWeights w = NetworkWeights::random(t.hidden, t.seed);
    std::mt19937_64 rng(t.seed + 50);
    std::normal_distribution<double> g;
    for (std::size_t l = 0; l < NetworkWeights::kLayers; ++l)
      for (double& bias : w.bias(l)) bias = 0.3 * g(rng);
    TrainingBatch b;
    b.neighbors_per_sample = t.k;
    b.feature_scale = 0.3;
    for (std::size_t i = 0; i < t.batch * t.k; ++i) b.inputs.push_back({g(rng), g(rng), g(rng)});
    for (std::size_t i = 0; i < t.batch; ++i) b.noise.push_back({g(rng), g(rng), g(rng)});
    const double sigma_t = 0.05;
    const LossAndGradient lg = network_gradient(w, b, sigma_t);
    const double step = 1e-6;
    for (std::size_t p = 0; p < w.parameter_count(); ++p) {
      NetworkWeights wp = w, wm = w;
      wp.params()[p] += step;
      wm.params()[p] -= step;
      const double fd =
          (network_gradient(wp, b, sigma_t).loss - network_gradient(wm, b, sigma_t).loss) /
          (2 * step);
      const double an = lg.gradient.params()[p];
      net_worst = std::max(net_worst,
                           std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-8}));
    }
  }
  return {kde_worst <= 1e-4 && net_worst <= 1e-4,
          "KDE max rel err " + fmt(kde_worst, 3) + " on 100 queries; network max rel err " +
              fmt(net_worst, 3) + " on 3 configurations (bound 1e-4)"};
}

// ------------------------------------------------------------------ C3 --

struct NoisyRun {
  PointCloud clean, noisy;
  double sigma_abs = 0.0;
};

NoisyRun gaussian_run(const PointCloud& clean, double level, std::uint64_t seed) {
  NoiseSpec spec;
  spec.level = level;
  spec.seed = seed;
  const GaussianNoiseResult r = add_gaussian_noise(clean, spec);
  return {clean, r.cloud, r.sigma_abs};
}

Verdict denoising_efficacy() {
  bool pass = true;
  std::string detail;
  for (const std::string shape : {"sphere", "torus"}) {
    const PointCloud clean = fixture_cloud(shape, 10000);
    for (double level : {0.01, 0.02, 0.03}) {
      const double bound = level == 0.01 ? 0.8 : 0.5;
      double ratio_sum = 0;
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const NoisyRun run = gaussian_run(clean, level, seed);
        PipelineOptions opts;
        opts.sigma = run.sigma_abs;
        const PipelineResult res = run_pipeline(run.noisy, opts);
        ratio_sum += evaluate_against_cloud(res.denoised, clean).cd /
                     evaluate_against_cloud(run.noisy, clean).cd;
      }
      const double ratio = ratio_sum / 5;
      const bool ok = ratio <= bound;
      pass = pass && ok;
      detail += shape + " " + fmt(100 * level, 2) + "%: " + fmt(ratio, 3) + (ok ? "<=" : ">") +
                fmt(bound, 2) + "; ";
    }
  }
  return {pass, "mean CD(denoised)/CD(noisy) over 5 seeds: " + detail};
}

// ------------------------------------------------------------------ C4 --

struct TrainedSphere {
  fs::path weights;
  bool ok = false;
};
TrainedSphere g_trained;

Verdict trained_network(const fs::path& work) {
  const PointCloud clean = fixture_cloud("sphere", 10000);
  const NoisyRun run = gaussian_run(clean, 0.02, 0);
  const fs::path noisy_path = work / "c4_sphere_noisy.xyz";
  io::write_point_cloud(noisy_path, run.noisy);

  TrainOptions t;
  t.in = noisy_path;
  t.out_weights = work / "c4_sphere.weights";
  const TrainCommandResult trained = cmd_train(t);  // default TrainConfig
  g_trained = {t.out_weights, true};

  PipelineOptions opts;
  opts.backend = Backend::network;
  opts.weights = trained.trained.weights;
  opts.weights_header = WeightsHeader{t.config, trained.trained.feature_scale};
  opts.sigma = run.sigma_abs;
  const PipelineResult res = run_pipeline(run.noisy, opts);
  const double cd_noisy = evaluate_against_cloud(run.noisy, clean).cd;
  const double cd_den = evaluate_against_cloud(res.denoised, clean).cd;
  const double ratio = cd_den / cd_noisy;

  // Cosine similarity with the KDE score whose bandwidth is the noise std, on
  // 1000 noisy points, in the normalized frame.
  const auto [y, tr] = normalize_to_unit_sphere(run.noisy);
  const double sigma_n = run.sigma_abs / tr.radius;
  const ScoreField net = network_field(trained.trained, y, t.config.k_feat);
  const ScoreField kde = ScoreField::kde(y, sigma_n, KdeScore::kDefaultNeighbors, true);
  std::vector<std::size_t> idx(y.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::shuffle(idx.begin(), idx.end(), std::mt19937_64(4));
  double cos_sum = 0;
  for (std::size_t j = 0; j < 1000; ++j) {
    const Vec3 a = net.evaluate(y[idx[j]]), b = kde.evaluate(y[idx[j]]);
    cos_sum += dot(a, b) / (norm(a) * norm(b));
  }
  const double cosine = cos_sum / 1000;

  const bool ratio_ok = 1.0 - ratio >= 0.6;
  const bool cos_ok = cosine >= 0.85;
  return {ratio_ok && cos_ok,
          "CD reduction 1 - " + fmt(ratio, 3) + " = " + fmt(1 - ratio, 3) +
              (ratio_ok ? " >= 0.6" : " < 0.6") + "; mean cosine vs KDE score " +
              fmt(cosine, 3) + (cos_ok ? " >= 0.85" : " < 0.85") + "; final loss " +
              fmt(trained.trained.epoch_loss.back(), 4)};
}

// ------------------------------------------------------------------ C5 --

Verdict blind_sigma() {
  const PointCloud clean = fixture_cloud("sphere", 10000);
  bool pass = true;
  std::string detail;
  for (double level : {0.01, 0.02, 0.03}) {
    const double bound = level == 0.01 ? 0.55 : 0.15;
    double worst = 0;
    std::string errs;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const NoisyRun run = gaussian_run(clean, level, seed);
      PipelineOptions opts;
      opts.estimate_sigma = true;
      const PipelineResult res = run_pipeline(run.noisy, opts);
      const double est = res.sigma_used * res.transform.radius;
      const double err = std::abs(est - run.sigma_abs) / run.sigma_abs;
      worst = std::max(worst, err);
      errs += (errs.empty() ? "" : "/") + fmt(100 * err, 3);
    }
    const bool ok = worst <= bound;
    pass = pass && ok;
    detail += fmt(100 * level, 2) + "%: " + errs + "% (bound " + fmt(100 * bound, 3) + "%); ";
  }
  return {pass, "relative sigma error per seed: " + detail};
}

// ------------------------------------------------------------------ C6 --

Verdict inference_speed(const fs::path& work) {
  fs::path weights = g_trained.weights;
  if (!g_trained.ok) {
    // Stand-alone run: any trained weights will do for a timing check.
    const fs::path small = work / "c6_train.xyz";
    io::write_point_cloud(small, fixture_cloud("sphere", 5000));
    TrainOptions t;
    t.in = small;
    t.out_weights = work / "c6.weights";
    t.config.epochs = 5;
    cmd_train(t);
    weights = t.out_weights;
  }
  const PointCloud clean = fixture_cloud("sphere", 50000);
  const NoisyRun run = gaussian_run(clean, 0.02, 0);
  const fs::path in = work / "c6_noisy_50k.xyz";
  io::write_point_cloud(in, run.noisy);

  DenoiseOptions d;
  d.in = in;
  d.out = work / "c6_denoised_50k.xyz";
  d.weights = weights;
  d.sigma = run.sigma_abs;
  const auto t0 = std::chrono::steady_clock::now();
  const DenoiseCommandResult r = cmd_denoise(d);
  const double wall = seconds_since(t0);
  double score = 0, update = 0;
  for (const auto& [stage, secs] : r.pipeline.timer.stages()) {
    if (stage == "score_evaluation") score = secs;
    if (stage == "tweedie_update") update = secs;
  }
  const double timed = score + update;
  return {timed < 10.0, "50k points: score evaluation " + fmt(score, 3) + " s + update " +
                            fmt(update, 3) + " s = " + fmt(timed, 3) +
                            " s (bound 10 s); whole command " + fmt(wall, 3) + " s"};
}

// ------------------------------------------------------------------ C7 --

Verdict metric_oracles() {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<std::size_t> n_pts(20, 500), n_tri(5, 100), n_q(20, 200);
  double cd_worst = 0, p2m_worst = 0;
  for (int c = 0; c < 50; ++c) {
    const PointCloud a = oracle::random_cloud(n_pts(rng), 1000 + c);
    const PointCloud b = oracle::random_cloud(n_pts(rng), 2000 + c, -0.7, 1.3);
    cd_worst = std::max(cd_worst,
                        oracle::rel_err(chamfer_distance(a, b), double(oracle::chamfer(a, b))));
  }
  for (int c = 0; c < 50; ++c) {
    const std::size_t nf = n_tri(rng);
    const auto v = oracle::random_points(3 * nf, 3000 + c);
    std::vector<Face> f;
    for (std::uint32_t i = 0; i < nf; ++i) f.push_back({3 * i, 3 * i + 1, 3 * i + 2});
    const TriangleMesh mesh(v, f);
    const PointCloud q = oracle::random_cloud(n_q(rng), 4000 + c, -1.5, 1.5);
    p2m_worst = std::max(
        p2m_worst, oracle::rel_err(point_to_mesh_distance(q, mesh), double(oracle::p2m(q, mesh))));
  }
  return {cd_worst <= 1e-12 && p2m_worst <= 1e-12,
          "max rel err CD " + fmt(cd_worst, 3) + ", P2M " + fmt(p2m_worst, 3) +
              " over 50 cases each (bound 1e-12)"};
}

// ------------------------------------------------------------------ C8 --

Verdict tvpc_properties() {
  const PointCloud c = oracle::random_cloud(2000, 8);
  const double base = tv_pc(c);
  double rigid = 0;
  for (int r = 0; r < 5; ++r) {
    const auto R = oracle::Rotation::euler(0.5 + r, -0.3 * r, 1.7 - r);
    const Vec3 t{0.3 * r - 1, 2.0, -0.5 * r};
    rigid = std::max(rigid, oracle::rel_err(tv_pc(oracle::translate(R(c), t)), base));
  }
  TvpcConfig zero;
  zero.epsilon = 0.0;
  const double z = tv_pc(c, zero);
  double homog = 0;
  for (double s : {0.25, 3.0, 10.0})
    homog = std::max(homog, oracle::rel_err(tv_pc(oracle::scale(c, s), zero), s * z));
  const PointCloud grid = oracle::grid(20, 0.05);
  const double g0 = tv_pc(grid);
  int wins = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 0.02);
    std::vector<Vec3> pts;
    for (const Vec3& p : grid) pts.push_back(p + Vec3{g(rng), g(rng), g(rng)});
    wins += tv_pc(PointCloud(pts)) > g0 ? 1 : 0;
  }
  return {rigid <= 1e-10 && homog <= 1e-12 && wins == 10,
          "rigid rel err " + fmt(rigid, 3) + " (1e-10); homogeneity rel err " + fmt(homog, 3) +
              " (1e-12); jitter raises TV for " + std::to_string(wins) + "/10 seeds"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pcdn acceptance checks"};
  bool strict = false;
  std::vector<int> only;
  fs::path work = fs::temp_directory_path() / "pcdn_acceptance";
  app.add_flag("--strict", strict, "Exit non-zero if any criterion fails");
  app.add_option("--only", only, "Run only these criterion numbers")->check(CLI::Range(1, 8));
  app.add_option("--workdir", work, "Scratch directory for generated files");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(work);

  struct Check {
    int id;
    const char* name;
    double budget_s;
    std::function<Verdict()> run;
  };
  const std::vector<Check> checks{
      {1, "Tweedie exactness", 5, tweedie_exactness},
      {2, "Score correctness", 30, score_correctness},
      {3, "Denoising efficacy", 120, denoising_efficacy},
      {4, "Trained-network efficacy", 900, [&] { return trained_network(work); }},
      {5, "Blind sigma estimation", 300, blind_sigma},
      {6, "One-step inference speed", 1e9, [&] { return inference_speed(work); }},
      {7, "Metric oracles", 60, metric_oracles},
      {8, "TV_PC properties", 1e9, tvpc_properties},
  };
  const std::set<int> selected(only.begin(), only.end());
  int failed = 0, ran = 0;
  for (const Check& c : checks) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    const double secs = seconds_since(t0);
    std::string timing = fmt(secs, 3) + " s";
    if (c.budget_s < 1e8) {
      const bool in_budget = secs < c.budget_s;
      timing += in_budget ? " < " : " >= ";
      timing += fmt(c.budget_s, 4) + " s budget";
      v.pass = v.pass && in_budget;
    }
    failed += v.pass ? 0 : 1;
    std::cout << (v.pass ? "[PASS] " : "[FAIL] ") << c.id << ". " << c.name << ": " << v.detail
              << " [" << timing << "]" << std::endl;
  }
  std::cout << "acceptance: " << (ran - failed) << "/" << ran << " criteria passed" << std::endl;
  return strict && failed > 0 ? 1 : 0;
}
