#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "pcdn/geometry.hpp"
#include "pcdn/network.hpp"
#include "pcdn/score.hpp"

namespace pcdn {

// Lengths are in unit-sphere units.
struct TrainConfig {
  std::size_t epochs = 200;
  double learning_rate = 2e-4;
  double weight_decay = 1e-4;
  double sigma_max = 0.05;
  double sigma_min = 0.005;
  std::size_t batch_points = 4096;
  std::size_t k_feat = 16;
  std::size_t hidden_width = 64;
  std::uint64_t seed = 0;

  void validate() const;

  // sigma_t for a 0-based epoch: linear from sigma_max to sigma_min.
  double sigma_at(std::size_t epoch) const;

  std::map<std::string, std::string> to_key_values() const;
  static TrainConfig from_key_values(const std::map<std::string, std::string>& kv);

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// Adam with decoupled weight decay, applied to every parameter.
class AdamW {
 public:
  AdamW(std::size_t parameter_count, double learning_rate, double weight_decay,
        double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8);

  void step(std::span<double> params, std::span<const double> grad);
  std::size_t steps() const noexcept { return t_; }

 private:
  double lr_, wd_, beta1_, beta2_, eps_;
  std::vector<double> m_, v_;
  std::size_t t_ = 0;
};

struct TrainResult {
  NetworkWeights weights;
  double feature_scale = 1.0;
  std::vector<double> epoch_loss;    // mean batch loss per epoch
  std::vector<double> epoch_sigma;   // sigma_t used in each epoch
};

using EpochCallback = std::function<void(std::size_t epoch, double sigma_t, double loss)>;

// AR-DAE training of the local score network on a cloud already normalized to
// the unit sphere. One epoch is a pass over a seeded permutation of the cloud
// in batches of batch_points; every batch perturbs its points by sigma_t u,
// u ~ N(0, I), and takes one AdamW step.
TrainResult train_score_network(const PointCloud& cloud, const TrainConfig& cfg,
                                const EpochCallback& on_epoch = {});

// Field backed by trained weights, evaluated against `source`.
ScoreField network_field(const TrainResult& trained, const PointCloud& source,
                         std::size_t k_feat);

}  // namespace pcdn
