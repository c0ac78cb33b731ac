#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pcdn/vec3.hpp"

namespace pcdn {

// Parameters of the local score network:
//
//   per neighbor j:  a1 = relu(W0 r_j + b0)      3 -> H
//                    a2 = relu(W1 a1 + b1)       H -> H
//   pooled = max_j a2                            (elementwise)
//   head:            a3 = relu(W2 pooled + b2)   H -> H
//                    out = W3 a3 + b3            H -> 3
//
// r_j are neighbor offsets relative to the query, divided by a feature scale.
// All parameters live in one flat vector; layer l is a row-major
// rows x cols matrix followed by its bias.
class NetworkWeights {
 public:
  static constexpr std::size_t kLayers = 4;

  struct LayerShape {
    std::size_t rows = 0;
    std::size_t cols = 0;
  };

  NetworkWeights() = default;
  explicit NetworkWeights(std::size_t hidden);

  static NetworkWeights zeros(std::size_t hidden) { return NetworkWeights(hidden); }
  // He-uniform hidden layers and a narrower output layer. Biases start at zero.
  static NetworkWeights random(std::size_t hidden, std::uint64_t seed);

  std::size_t hidden() const noexcept { return hidden_; }
  LayerShape shape(std::size_t layer) const;
  static LayerShape shape_of(std::size_t layer, std::size_t hidden);

  std::span<double> weights(std::size_t layer);
  std::span<const double> weights(std::size_t layer) const;
  std::span<double> bias(std::size_t layer);
  std::span<const double> bias(std::size_t layer) const;

  std::span<double> params() noexcept { return params_; }
  std::span<const double> params() const noexcept { return params_; }
  std::size_t parameter_count() const noexcept { return params_.size(); }

  void fill(double v);
  NetworkWeights& operator+=(const NetworkWeights& o);
  NetworkWeights& operator*=(double s);
  bool all_finite() const;

  friend bool operator==(const NetworkWeights&, const NetworkWeights&) = default;

 private:
  std::size_t offset(std::size_t layer) const;

  std::size_t hidden_ = 0;
  std::vector<double> params_;
};

// Scratch buffers for one forward/backward pass. Reusable across samples.
struct NetworkCache {
  std::size_t neighbors = 0;
  std::vector<double> z1, a1, z2, a2;  // neighbors x H
  std::vector<double> pooled, z3, a3;  // H
  std::vector<std::uint32_t> argmax;   // H
  std::vector<double> d_a1, d_z2, d_pooled, d_z3;
};

// Head output for one sample, before division by the feature scale.
Vec3 network_forward(const NetworkWeights& w, std::span<const Vec3> inputs, NetworkCache& cache);

// Accumulates d(out . d_out)/d(params) into `grad`, using the activations
// stored in `cache` by the matching forward call. The cache's gradient
// buffers are overwritten.
void network_backward(const NetworkWeights& w, std::span<const Vec3> inputs, NetworkCache& cache,
                      const Vec3& d_out, NetworkWeights& grad);

// Training batch: `inputs` holds neighbors_per_sample scaled offsets per sample.
struct TrainingBatch {
  std::size_t neighbors_per_sample = 0;
  std::vector<Vec3> inputs;
  std::vector<Vec3> noise;  // u_i, one per sample
  double feature_scale = 1.0;

  std::size_t size() const noexcept { return noise.size(); }
  std::span<const Vec3> sample(std::size_t i) const {
    return std::span<const Vec3>(inputs).subspan(i * neighbors_per_sample, neighbors_per_sample);
  }
};

struct LossAndGradient {
  double loss = 0.0;
  NetworkWeights gradient;
};

// Mean of |sigma_t * S_i + u_i|^2 over the batch, S_i = out_i / feature_scale,
// and its exact gradient. Samples are processed in fixed-size chunks reduced
// in index order, so the result does not depend on the worker count.
LossAndGradient network_gradient(const NetworkWeights& w, const TrainingBatch& batch,
                                 double sigma_t);

// Predicted scores S_i for every sample of the batch.
std::vector<Vec3> network_scores(const NetworkWeights& w, const TrainingBatch& batch);

}  // namespace pcdn
