#include "pcdn/network.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "pcdn/error.hpp"
#include "pcdn/parallel.hpp"

namespace pcdn {
namespace {

constexpr std::size_t kChunk = 32;

void resize_cache(NetworkCache& c, std::size_t k, std::size_t h) {
  c.neighbors = k;
  c.z1.resize(k * h);
  c.a1.resize(k * h);
  c.z2.resize(k * h);
  c.a2.resize(k * h);
  c.pooled.resize(h);
  c.z3.resize(h);
  c.a3.resize(h);
  c.argmax.resize(h);
  c.d_a1.resize(h);
  c.d_z2.resize(h);
  c.d_pooled.resize(h);
  c.d_z3.resize(h);
}

}  // namespace

NetworkWeights::NetworkWeights(std::size_t hidden) : hidden_(hidden) {
  if (hidden == 0) throw InvalidInput("hidden width must be positive");
  std::size_t total = 0;
  for (std::size_t l = 0; l < kLayers; ++l) {
    const LayerShape s = shape(l);
    total += s.rows * s.cols + s.rows;
  }
  params_.assign(total, 0.0);
}

NetworkWeights NetworkWeights::random(std::size_t hidden, std::uint64_t seed) {
  NetworkWeights w(hidden);
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < kLayers; ++l) {
    const LayerShape s = shape_of(l, hidden);
    const double fan_in = static_cast<double>(s.cols);
    const double limit = l + 1 < kLayers ? std::sqrt(6.0 / fan_in) : std::sqrt(1.0 / fan_in);
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (double& v : w.weights(l)) v = dist(rng);
  }
  return w;
}

NetworkWeights::LayerShape NetworkWeights::shape_of(std::size_t layer, std::size_t hidden) {
  switch (layer) {
    case 0: return {hidden, 3};
    case 1: return {hidden, hidden};
    case 2: return {hidden, hidden};
    case 3: return {3, hidden};
    default: throw InvalidInput("layer index out of range");
  }
}

NetworkWeights::LayerShape NetworkWeights::shape(std::size_t layer) const {
  return shape_of(layer, hidden_);
}

std::size_t NetworkWeights::offset(std::size_t layer) const {
  std::size_t off = 0;
  for (std::size_t l = 0; l < layer; ++l) {
    const LayerShape s = shape(l);
    off += s.rows * s.cols + s.rows;
  }
  return off;
}

std::span<double> NetworkWeights::weights(std::size_t layer) {
  const LayerShape s = shape(layer);
  return std::span<double>(params_).subspan(offset(layer), s.rows * s.cols);
}
std::span<const double> NetworkWeights::weights(std::size_t layer) const {
  const LayerShape s = shape(layer);
  return std::span<const double>(params_).subspan(offset(layer), s.rows * s.cols);
}
std::span<double> NetworkWeights::bias(std::size_t layer) {
  const LayerShape s = shape(layer);
  return std::span<double>(params_).subspan(offset(layer) + s.rows * s.cols, s.rows);
}
std::span<const double> NetworkWeights::bias(std::size_t layer) const {
  const LayerShape s = shape(layer);
  return std::span<const double>(params_).subspan(offset(layer) + s.rows * s.cols, s.rows);
}

void NetworkWeights::fill(double v) { std::fill(params_.begin(), params_.end(), v); }

NetworkWeights& NetworkWeights::operator+=(const NetworkWeights& o) {
  if (o.params_.size() != params_.size()) throw InvalidInput("network shape mismatch");
  for (std::size_t i = 0; i < params_.size(); ++i) params_[i] += o.params_[i];
  return *this;
}

NetworkWeights& NetworkWeights::operator*=(double s) {
  for (double& v : params_) v *= s;
  return *this;
}

bool NetworkWeights::all_finite() const {
  return std::all_of(params_.begin(), params_.end(), [](double v) { return std::isfinite(v); });
}

Vec3 network_forward(const NetworkWeights& w, std::span<const Vec3> inputs, NetworkCache& c) {
  const std::size_t h = w.hidden();
  const std::size_t k = inputs.size();
  if (k == 0) throw InvalidInput("network input needs at least one neighbor");
  resize_cache(c, k, h);

  const auto w0 = w.weights(0);
  const auto b0 = w.bias(0);
  const auto w1 = w.weights(1);
  const auto b1 = w.bias(1);
  for (std::size_t j = 0; j < k; ++j) {
    const Vec3& r = inputs[j];
    double* z1 = &c.z1[j * h];
    double* a1 = &c.a1[j * h];
    for (std::size_t u = 0; u < h; ++u) {
      z1[u] = w0[u * 3] * r.x + w0[u * 3 + 1] * r.y + w0[u * 3 + 2] * r.z + b0[u];
      a1[u] = z1[u] > 0.0 ? z1[u] : 0.0;
    }
    double* z2 = &c.z2[j * h];
    double* a2 = &c.a2[j * h];
    for (std::size_t u = 0; u < h; ++u) {
      const double* row = &w1[u * h];
      double acc = b1[u];
      for (std::size_t v = 0; v < h; ++v) acc += row[v] * a1[v];
      z2[u] = acc;
      a2[u] = acc > 0.0 ? acc : 0.0;
    }
  }

  // Max-pool; ties go to the lowest neighbor index.
  for (std::size_t u = 0; u < h; ++u) {
    std::uint32_t best = 0;
    double value = c.a2[u];
    for (std::size_t j = 1; j < k; ++j) {
      if (c.a2[j * h + u] > value) {
        value = c.a2[j * h + u];
        best = static_cast<std::uint32_t>(j);
      }
    }
    c.pooled[u] = value;
    c.argmax[u] = best;
  }

  const auto w2 = w.weights(2);
  const auto b2 = w.bias(2);
  for (std::size_t u = 0; u < h; ++u) {
    const double* row = &w2[u * h];
    double acc = b2[u];
    for (std::size_t v = 0; v < h; ++v) acc += row[v] * c.pooled[v];
    c.z3[u] = acc;
    c.a3[u] = acc > 0.0 ? acc : 0.0;
  }

  const auto w3 = w.weights(3);
  const auto b3 = w.bias(3);
  Vec3 out;
  for (std::size_t o = 0; o < 3; ++o) {
    const double* row = &w3[o * h];
    double acc = b3[o];
    for (std::size_t v = 0; v < h; ++v) acc += row[v] * c.a3[v];
    out[o] = acc;
  }
  return out;
}

void network_backward(const NetworkWeights& w, std::span<const Vec3> inputs,
                      NetworkCache& c, const Vec3& d_out, NetworkWeights& grad) {
  const std::size_t h = w.hidden();
  const std::size_t k = inputs.size();

  // Output layer.
  {
    const auto w3 = w.weights(3);
    auto g3 = grad.weights(3);
    auto gb3 = grad.bias(3);
    std::fill(c.d_z3.begin(), c.d_z3.end(), 0.0);
    for (std::size_t o = 0; o < 3; ++o) {
      const double d = d_out[o];
      gb3[o] += d;
      for (std::size_t v = 0; v < h; ++v) {
        g3[o * h + v] += d * c.a3[v];
        c.d_z3[v] += w3[o * h + v] * d;
      }
    }
    for (std::size_t v = 0; v < h; ++v)
      if (!(c.z3[v] > 0.0)) c.d_z3[v] = 0.0;
  }

  // Head hidden layer.
  {
    const auto w2 = w.weights(2);
    auto g2 = grad.weights(2);
    auto gb2 = grad.bias(2);
    std::fill(c.d_pooled.begin(), c.d_pooled.end(), 0.0);
    for (std::size_t u = 0; u < h; ++u) {
      const double d = c.d_z3[u];
      if (d == 0.0) continue;
      gb2[u] += d;
      double* grow = &g2[u * h];
      const double* row = &w2[u * h];
      for (std::size_t v = 0; v < h; ++v) {
        grow[v] += d * c.pooled[v];
        c.d_pooled[v] += row[v] * d;
      }
    }
  }

  // Encoder, one neighbor at a time: only the pooled winners receive gradient.
  const auto w1 = w.weights(1);
  auto g1 = grad.weights(1);
  auto gb1 = grad.bias(1);
  auto g0 = grad.weights(0);
  auto gb0 = grad.bias(0);
  for (std::size_t j = 0; j < k; ++j) {
    bool any = false;
    for (std::size_t u = 0; u < h; ++u) {
      const bool wins = c.argmax[u] == j && c.z2[j * h + u] > 0.0;
      c.d_z2[u] = wins ? c.d_pooled[u] : 0.0;
      any = any || (wins && c.d_pooled[u] != 0.0);
    }
    if (!any) continue;

    const double* a1 = &c.a1[j * h];
    std::fill(c.d_a1.begin(), c.d_a1.end(), 0.0);
    for (std::size_t u = 0; u < h; ++u) {
      const double d = c.d_z2[u];
      if (d == 0.0) continue;
      gb1[u] += d;
      double* grow = &g1[u * h];
      const double* row = &w1[u * h];
      for (std::size_t v = 0; v < h; ++v) {
        grow[v] += d * a1[v];
        c.d_a1[v] += row[v] * d;
      }
    }

    const Vec3& r = inputs[j];
    const double* z1 = &c.z1[j * h];
    for (std::size_t u = 0; u < h; ++u) {
      if (!(z1[u] > 0.0)) continue;
      const double d = c.d_a1[u];
      gb0[u] += d;
      g0[u * 3] += d * r.x;
      g0[u * 3 + 1] += d * r.y;
      g0[u * 3 + 2] += d * r.z;
    }
  }
}

std::vector<Vec3> network_scores(const NetworkWeights& w, const TrainingBatch& batch) {
  std::vector<Vec3> out(batch.size());
  parallel_for(batch.size(), [&](std::size_t begin, std::size_t end) {
    NetworkCache cache;
    for (std::size_t i = begin; i < end; ++i)
      out[i] = network_forward(w, batch.sample(i), cache) / batch.feature_scale;
  }, 64);
  return out;
}

LossAndGradient network_gradient(const NetworkWeights& w, const TrainingBatch& batch,
                                 double sigma_t) {
  const std::size_t n = batch.size();
  if (n == 0) throw InvalidInput("training batch is empty");
  if (batch.inputs.size() != n * batch.neighbors_per_sample)
    throw InvalidInput("training batch inputs do not match its sample count");

  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  std::vector<NetworkWeights> partial(chunks, NetworkWeights::zeros(w.hidden()));
  std::vector<double> partial_loss(chunks, 0.0);
  const double inv_n = 1.0 / static_cast<double>(n);

  parallel_for(chunks, [&](std::size_t cb, std::size_t ce) {
    NetworkCache cache;
    for (std::size_t ch = cb; ch < ce; ++ch) {
      const std::size_t begin = ch * kChunk;
      const std::size_t end = std::min(n, begin + kChunk);
      for (std::size_t i = begin; i < end; ++i) {
        const auto in = batch.sample(i);
        const Vec3 score = network_forward(w, in, cache) / batch.feature_scale;
        const Vec3 residual = sigma_t * score + batch.noise[i];
        partial_loss[ch] += squared_norm(residual);
        // dL/dout = (2/N) sigma_t residual / feature_scale
        const Vec3 d_out = residual * (2.0 * inv_n * sigma_t / batch.feature_scale);
        network_backward(w, in, cache, d_out, partial[ch]);
      }
    }
  }, 1);

  LossAndGradient result{0.0, NetworkWeights::zeros(w.hidden())};
  for (std::size_t ch = 0; ch < chunks; ++ch) {
    result.loss += partial_loss[ch];
    result.gradient += partial[ch];
  }
  result.loss *= inv_n;
  return result;
}

}  // namespace pcdn
