#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "pcdn/error.hpp"
#include "pcdn/geometry.hpp"
#include "pcdn/parallel.hpp"
#include "pcdn/sampling.hpp"
#include "pcdn/shapes.hpp"
#include "pcdn/training.hpp"

using namespace pcdn;

namespace {

TrainingBatch random_batch(std::size_t samples, std::size_t k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  TrainingBatch b;
  b.neighbors_per_sample = k;
  b.feature_scale = 0.37;
  for (std::size_t i = 0; i < samples * k; ++i) b.inputs.push_back({g(rng), g(rng), g(rng)});
  for (std::size_t i = 0; i < samples; ++i) b.noise.push_back({g(rng), g(rng), g(rng)});
  return b;
}

// Forward pass written out directly from the layer definitions.
Vec3 reference_forward(const NetworkWeights& w, std::span<const Vec3> in) {
  const std::size_t H = w.hidden();
  auto dense = [&](std::size_t layer, const std::vector<double>& x, bool relu) {
    const auto s = w.shape(layer);
    const auto W = w.weights(layer);
    const auto b = w.bias(layer);
    std::vector<double> y(s.rows);
    for (std::size_t r = 0; r < s.rows; ++r) {
      long double acc = b[r];
      for (std::size_t c = 0; c < s.cols; ++c) acc += (long double)W[r * s.cols + c] * x[c];
      y[r] = relu ? std::max(0.0, double(acc)) : double(acc);
    }
    return y;
  };
  std::vector<double> pooled(H, -INFINITY);
  for (const Vec3& r : in) {
    const auto a2 = dense(1, dense(0, {r.x, r.y, r.z}, true), true);
    for (std::size_t h = 0; h < H; ++h) pooled[h] = std::max(pooled[h], a2[h]);
  }
  const auto out = dense(3, dense(2, pooled, true), false);
  return {out[0], out[1], out[2]};
}

double reference_loss(const NetworkWeights& w, const TrainingBatch& b, double sigma_t) {
  long double total = 0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    const Vec3 s = reference_forward(w, b.sample(i)) / b.feature_scale;
    for (int a = 0; a < 3; ++a) {
      const long double r = (long double)sigma_t * s[a] + b.noise[i][a];
      total += r * r;
    }
  }
  return double(total / b.size());
}

// Random weights with non-zero biases. With zero biases a dead hidden unit
// has a pre-activation of exactly 0, a ReLU kink where central differences
// do not estimate the gradient.
NetworkWeights generic_weights(std::size_t hidden, std::uint64_t seed) {
  NetworkWeights w = NetworkWeights::random(hidden, seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (std::size_t l = 0; l < NetworkWeights::kLayers; ++l)
    for (double& b : w.bias(l)) b = u(rng);
  return w;
}

}  // namespace

TEST_SUITE("network") {
  TEST_CASE("layer shapes and parameter count") {
    const NetworkWeights w(8);
    CHECK(w.shape(0).rows == 8);
    CHECK(w.shape(0).cols == 3);
    CHECK(w.shape(3).rows == 3);
    CHECK(w.shape(3).cols == 8);
    CHECK(w.parameter_count() == (8 * 3 + 8) + (8 * 8 + 8) + (8 * 8 + 8) + (3 * 8 + 3));
  }

  TEST_CASE("forward pass matches the reference evaluation") {
    const NetworkWeights w = NetworkWeights::random(16, 5);
    const TrainingBatch b = random_batch(7, 9, 6);
    NetworkCache cache;
    for (std::size_t i = 0; i < b.size(); ++i) {
      const Vec3 got = network_forward(w, b.sample(i), cache);
      const Vec3 want = reference_forward(w, b.sample(i));
      CHECK(distance(got, want) <= 1e-12 * std::max(1.0, norm(want)));
    }
    CHECK(reference_loss(w, b, 0.02) ==
          doctest::Approx(network_gradient(w, b, 0.02).loss).epsilon(1e-12));
  }

  TEST_CASE("zero weights give zero scores and loss |u|^2") {
    const NetworkWeights w = NetworkWeights::zeros(6);
    const TrainingBatch b = random_batch(4, 3, 1);
    for (const Vec3& s : network_scores(w, b)) CHECK(s == Vec3{});
    long double uu = 0;
    for (const Vec3& u : b.noise) uu += dot(u, u);
    CHECK(network_gradient(w, b, 0.3).loss == doctest::Approx(double(uu / 4)).epsilon(1e-14));
  }

  TEST_CASE("output bias passes straight through") {
    NetworkWeights w = NetworkWeights::zeros(4);
    w.bias(3)[0] = 1.5;
    w.bias(3)[2] = -0.25;
    NetworkCache cache;
    const TrainingBatch b = random_batch(1, 5, 2);
    CHECK(network_forward(w, b.sample(0), cache) == Vec3{1.5, 0.0, -0.25});
  }

  TEST_CASE("gradient matches central finite differences") {
    // Small network so every parameter is checked.
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const NetworkWeights w = generic_weights(4, seed);
      const TrainingBatch b = random_batch(5, 3, seed + 100);
      const double sigma_t = 0.05;
      const LossAndGradient lg = network_gradient(w, b, sigma_t);
      const double step = 1e-6;
      for (std::size_t p = 0; p < w.parameter_count(); ++p) {
        NetworkWeights wp = w, wm = w;
        wp.params()[p] += step;
        wm.params()[p] -= step;
        const double fd = (reference_loss(wp, b, sigma_t) - reference_loss(wm, b, sigma_t)) /
                          (2 * step);
        const double g = lg.gradient.params()[p];
        CHECK(std::abs(g - fd) <= 1e-4 * std::max({std::abs(g), std::abs(fd), 1e-8}) + 1e-9);
      }
    }
  }

  TEST_CASE("gradient does not depend on the worker count") {
    const NetworkWeights w = NetworkWeights::random(32, 9);
    const TrainingBatch b = random_batch(700, 8, 10);
    set_thread_count(1);
    const LossAndGradient one = network_gradient(w, b, 0.01);
    set_thread_count(4);
    const LossAndGradient four = network_gradient(w, b, 0.01);
    set_thread_count(0);
    CHECK(one.loss == four.loss);
    CHECK(one.gradient == four.gradient);
  }

  TEST_CASE("adamw first step moves each parameter by the learning rate") {
    AdamW opt(3, 0.1, 0.0);
    std::vector<double> p{1.0, -2.0, 0.5};
    const std::vector<double> g{0.3, -4.0, 1e-3};
    opt.step(p, g);
    CHECK(p[0] == doctest::Approx(0.9).epsilon(1e-6));
    CHECK(p[1] == doctest::Approx(-1.9).epsilon(1e-6));
    CHECK(p[2] == doctest::Approx(0.4).epsilon(1e-4));
    CHECK(opt.steps() == 1);
  }

  TEST_CASE("adamw decay shrinks parameters with zero gradient") {
    AdamW opt(2, 0.01, 0.5);
    std::vector<double> p{2.0, -1.0};
    const std::vector<double> g{0.0, 0.0};
    opt.step(p, g);
    CHECK(p[0] == doctest::Approx(2.0 * (1 - 0.01 * 0.5)).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(-1.0 * (1 - 0.01 * 0.5)).epsilon(1e-12));
  }

  TEST_CASE("train config schedule and validation") {
    TrainConfig cfg;
    cfg.epochs = 11;
    CHECK(cfg.sigma_at(0) == cfg.sigma_max);
    CHECK(cfg.sigma_at(10) == doctest::Approx(cfg.sigma_min).epsilon(1e-15));
    CHECK(cfg.sigma_at(5) == doctest::Approx(0.5 * (cfg.sigma_max + cfg.sigma_min)));
    CHECK(TrainConfig::from_key_values(cfg.to_key_values()) == cfg);
    cfg.sigma_min = 0.1;
    CHECK_THROWS_AS(cfg.validate(), InvalidInput);
  }

  TEST_CASE("training is deterministic for a seed") {
    const PointCloud c =
        normalize_to_unit_sphere(sample_mesh(shapes::icosphere(4), 600, 3)).first;
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_points = 256;
    cfg.hidden_width = 8;
    cfg.seed = 4;
    const TrainResult a = train_score_network(c, cfg);
    const TrainResult b = train_score_network(c, cfg);
    CHECK(a.weights == b.weights);
    CHECK(a.epoch_loss == b.epoch_loss);
    REQUIRE(a.epoch_sigma.size() == 3);
    cfg.seed = 5;
    CHECK_FALSE(train_score_network(c, cfg).weights == a.weights);
  }

  TEST_CASE("training needs at least k_feat points") {
    const PointCloud c = normalize_to_unit_sphere(oracle::random_cloud(10, 1)).first;
    TrainConfig cfg;
    cfg.k_feat = 16;
    CHECK_THROWS_AS(train_score_network(c, cfg), InvalidInput);
  }

  TEST_CASE("a runaway learning rate is reported as divergence") {
    const PointCloud c = normalize_to_unit_sphere(oracle::random_cloud(300, 2)).first;
    TrainConfig cfg;
    cfg.epochs = 20;
    cfg.hidden_width = 8;
    cfg.learning_rate = 1e300;
    CHECK_THROWS_AS(train_score_network(c, cfg), TrainingDiverged);
  }

  TEST_CASE("trained score points toward a plane from both sides") {
    // Noisy-free planar patch: the learned score should pull off-plane
    // queries back toward z = 0.
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<Vec3> pts;
    for (int i = 0; i < 3000; ++i) pts.push_back({u(rng) * 0.7, u(rng) * 0.7, 0.0});
    const PointCloud c(pts);
    TrainConfig cfg;
    cfg.epochs = 60;
    cfg.batch_points = 512;
    cfg.hidden_width = 32;
    cfg.learning_rate = 1e-3;
    cfg.seed = 1;
    const TrainResult tr = train_score_network(c, cfg);
    const ScoreField f = network_field(tr, c, cfg.k_feat);
    int correct = 0, total = 0;
    for (double z : {-0.03, -0.015, 0.015, 0.03}) {
      for (int i = 0; i < 25; ++i) {
        const Vec3 q{u(rng) * 0.4, u(rng) * 0.4, z};
        correct += (f.evaluate(q).z * z < 0) ? 1 : 0;
        ++total;
      }
    }
    CHECK(correct >= total * 9 / 10);
  }

  TEST_CASE("smoothed training loss does not increase on a clean surface") {
    const PointCloud c = normalize_to_unit_sphere(sample_mesh(shapes::icosphere(4), 4000, 8)).first;
    TrainConfig cfg;
    cfg.epochs = 40;
    cfg.batch_points = 512;
    cfg.hidden_width = 32;
    cfg.learning_rate = 1e-3;
    cfg.sigma_max = cfg.sigma_min = 0.02;
    const TrainResult tr = train_score_network(c, cfg);
    const std::size_t w = 10;
    std::vector<double> smooth;
    for (std::size_t e = 0; e + w <= tr.epoch_loss.size(); e += w) {
      double s = 0;
      for (std::size_t i = e; i < e + w; ++i) s += tr.epoch_loss[i];
      smooth.push_back(s / w);
    }
    for (std::size_t i = 1; i < smooth.size(); ++i) CHECK(smooth[i] <= smooth[i - 1] * 1.01);
    CHECK(smooth.back() < smooth.front());
  }
}
