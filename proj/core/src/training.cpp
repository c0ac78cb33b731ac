#include "pcdn/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "pcdn/error.hpp"
#include "pcdn/parallel.hpp"
#include "pcdn/random.hpp"
#include "pcdn/text.hpp"

namespace pcdn {
namespace {

constexpr std::uint64_t kPerturbStream = 0x7065727475726231ULL;

}  // namespace

void TrainConfig::validate() const {
  if (epochs == 0 || batch_points == 0 || k_feat == 0 || hidden_width == 0)
    throw InvalidInput("epochs, batch_points, k_feat and hidden_width must be positive");
  if (!(sigma_min > 0.0) || !(sigma_max >= sigma_min))
    throw InvalidInput("need sigma_max >= sigma_min > 0");
  if (!(learning_rate > 0.0) || !(weight_decay >= 0.0))
    throw InvalidInput("learning rate must be positive and weight decay non-negative");
}

double TrainConfig::sigma_at(std::size_t epoch) const {
  if (epochs <= 1) return sigma_max;
  const double t = static_cast<double>(epoch) / static_cast<double>(epochs - 1);
  return sigma_max + (sigma_min - sigma_max) * t;
}

std::map<std::string, std::string> TrainConfig::to_key_values() const {
  return {{"train.epochs", std::to_string(epochs)},
          {"train.learning_rate", format_double(learning_rate)},
          {"train.weight_decay", format_double(weight_decay)},
          {"train.sigma_max", format_double(sigma_max)},
          {"train.sigma_min", format_double(sigma_min)},
          {"train.batch_points", std::to_string(batch_points)},
          {"train.k_feat", std::to_string(k_feat)},
          {"train.hidden_width", std::to_string(hidden_width)},
          {"train.seed", std::to_string(seed)},
          {"train.optimizer", "adamw"}};
}

TrainConfig TrainConfig::from_key_values(const std::map<std::string, std::string>& kv) {
  TrainConfig c;
  auto get = [&](const char* key) -> const std::string* {
    auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  };
  if (auto v = get("train.epochs")) c.epochs = parse_u64(*v);
  if (auto v = get("train.learning_rate")) c.learning_rate = parse_double(*v);
  if (auto v = get("train.weight_decay")) c.weight_decay = parse_double(*v);
  if (auto v = get("train.sigma_max")) c.sigma_max = parse_double(*v);
  if (auto v = get("train.sigma_min")) c.sigma_min = parse_double(*v);
  if (auto v = get("train.batch_points")) c.batch_points = parse_u64(*v);
  if (auto v = get("train.k_feat")) c.k_feat = parse_u64(*v);
  if (auto v = get("train.hidden_width")) c.hidden_width = parse_u64(*v);
  if (auto v = get("train.seed")) c.seed = parse_u64(*v);
  return c;
}

AdamW::AdamW(std::size_t parameter_count, double learning_rate, double weight_decay,
             double beta1, double beta2, double epsilon)
    : lr_(learning_rate),
      wd_(weight_decay),
      beta1_(beta1),
      beta2_(beta2),
      eps_(epsilon),
      m_(parameter_count, 0.0),
      v_(parameter_count, 0.0) {}

void AdamW::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != m_.size() || grad.size() != m_.size())
    throw InvalidInput("optimizer state does not match the parameter count");
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    const double m_hat = m_[i] / bc1;
    const double v_hat = v_[i] / bc2;
    params[i] -= lr_ * (m_hat / (std::sqrt(v_hat) + eps_) + wd_ * params[i]);
  }
}

TrainResult train_score_network(const PointCloud& cloud, const TrainConfig& cfg,
                                const EpochCallback& on_epoch) {
  cfg.validate();
  if (cloud.size() < cfg.k_feat) throw InvalidInput("cloud has fewer points than k_feat");
  for (const Vec3& p : cloud) {
    if (squared_norm(p) > 1.0 + 1e-9)
      throw InvalidInput("training cloud must be normalized to the unit sphere");
  }

  TrainResult result;
  result.weights = NetworkWeights::random(cfg.hidden_width, cfg.seed);
  result.feature_scale = median_knn_distance(cloud, cfg.k_feat);
  if (!(result.feature_scale > 0.0)) throw InvalidInput("cloud has no spatial extent");

  const KdTree index(cloud);
  AdamW optimizer(result.weights.parameter_count(), cfg.learning_rate, cfg.weight_decay);
  std::mt19937_64 shuffle_rng(mix_key(cfg.seed, 0x73687566ULL));
  std::vector<std::size_t> order(cloud.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  const std::size_t n = cloud.size();
  const std::size_t batches = (n + cfg.batch_points - 1) / cfg.batch_points;
  TrainingBatch batch;
  batch.neighbors_per_sample = cfg.k_feat;
  batch.feature_scale = result.feature_scale;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double sigma_t = cfg.sigma_at(epoch);
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t begin = b * cfg.batch_points;
      const std::size_t count = std::min(n, begin + cfg.batch_points) - begin;
      batch.noise.resize(count);
      batch.inputs.resize(count * cfg.k_feat);
      parallel_for(count, [&](std::size_t s0, std::size_t s1) {
        for (std::size_t s = s0; s < s1; ++s) {
          const std::size_t point = order[begin + s];
          CounterRng rng(cfg.seed, kPerturbStream + epoch, point);
          const double ux = rng.normal();
          const double uy = rng.normal();
          const double uz = rng.normal();
          const Vec3 u{ux, uy, uz};
          batch.noise[s] = u;
          gather_network_inputs(index, cloud[point] + sigma_t * u, cfg.k_feat,
                                result.feature_scale, point,
                                std::span<Vec3>(batch.inputs).subspan(s * cfg.k_feat, cfg.k_feat));
        }
      });
      LossAndGradient lg = network_gradient(result.weights, batch, sigma_t);
      if (!std::isfinite(lg.loss) || !lg.gradient.all_finite()) throw TrainingDiverged(epoch);
      optimizer.step(result.weights.params(), lg.gradient.params());
      loss_sum += lg.loss * static_cast<double>(count);
    }
    const double epoch_loss = loss_sum / static_cast<double>(n);
    if (!std::isfinite(epoch_loss) || !result.weights.all_finite()) throw TrainingDiverged(epoch);
    result.epoch_loss.push_back(epoch_loss);
    result.epoch_sigma.push_back(sigma_t);
    if (on_epoch) on_epoch(epoch, sigma_t, epoch_loss);
  }
  return result;
}

ScoreField network_field(const TrainResult& trained, const PointCloud& source,
                         std::size_t k_feat) {
  return ScoreField(NetworkScore(trained.weights, source, k_feat, trained.feature_scale));
}

}  // namespace pcdn
