#include "pcdn/tvpc.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "pcdn/error.hpp"
#include "pcdn/kdtree.hpp"
#include "pcdn/parallel.hpp"
#include "pcdn/text.hpp"
#include "pcdn/tweedie.hpp"

namespace pcdn {

std::string to_string(TvWeightMode mode) {
  return mode == TvWeightMode::constant ? "constant" : "gaussian";
}

TvWeightMode tv_weight_mode_from_string(const std::string& name) {
  if (name == "constant") return TvWeightMode::constant;
  if (name == "gaussian") return TvWeightMode::gaussian;
  throw InvalidInput("unknown TV_PC weight mode '" + name + "'");
}
namespace {

double edge_term(const Vec3& a, const Vec3& b, const TvpcConfig& cfg) {
  const double d2 = squared_distance(a, b);
  double w = 1.0;
  if (cfg.weight_mode == TvWeightMode::gaussian)
    w = std::exp(-d2 / (2.0 * cfg.gaussian_scale * cfg.gaussian_scale));
  return w * std::sqrt(d2 + cfg.epsilon * cfg.epsilon);
}

// kNN of point i excluding i itself.
void neighbors_of(const KdTree& tree, const PointCloud& cloud, std::size_t i, std::size_t k,
                  std::vector<Neighbor>& scratch, std::vector<std::size_t>& out) {
  tree.knn(cloud[i], k + 1, scratch);
  out.clear();
  for (const Neighbor& n : scratch) {
    if (n.index == i) continue;
    if (out.size() == k) break;
    out.push_back(n.index);
  }
}

}  // namespace

void TvpcConfig::validate() const {
  if (k == 0) throw InvalidInput("TV_PC neighbor count must be >= 1");
  if (!(epsilon >= 0.0)) throw InvalidInput("TV_PC epsilon must be >= 0");
  if (weight_mode == TvWeightMode::gaussian && !(gaussian_scale > 0.0))
    throw InvalidInput("gaussian weight scale must be positive");
}

std::map<std::string, std::string> TvpcConfig::to_key_values() const {
  return {{"tvpc.k", std::to_string(k)},
          {"tvpc.epsilon", format_double(epsilon)},
          {"tvpc.weight_mode", to_string(weight_mode)},
          {"tvpc.gaussian_scale", format_double(gaussian_scale)},
          {"tvpc.symmetric", symmetric ? "1" : "0"}};
}

TvpcConfig TvpcConfig::from_key_values(const std::map<std::string, std::string>& kv) {
  TvpcConfig c;
  auto get = [&](const char* key) -> const std::string* {
    auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  };
  if (auto v = get("tvpc.k")) c.k = parse_u64(*v);
  if (auto v = get("tvpc.epsilon")) c.epsilon = parse_double(*v);
  if (auto v = get("tvpc.weight_mode")) {
    try {
      c.weight_mode = tv_weight_mode_from_string(*v);
    } catch (const InvalidInput& e) {
      throw ParseError(e.what());
    }
  }
  if (auto v = get("tvpc.gaussian_scale")) c.gaussian_scale = parse_double(*v);
  if (auto v = get("tvpc.symmetric")) c.symmetric = *v == "1" || *v == "true";
  return c;
}

double tv_pc(const PointCloud& cloud, const TvpcConfig& cfg) {
  cfg.validate();
  if (cloud.size() < 2) throw InvalidInput("TV_PC needs at least two points");
  const KdTree tree(cloud);
  const std::size_t n = cloud.size();

  if (!cfg.symmetric) {
    std::vector<double> per_point(n, 0.0);
    parallel_for(n, [&](std::size_t begin, std::size_t end) {
      std::vector<Neighbor> scratch;
      std::vector<std::size_t> nbrs;
      for (std::size_t i = begin; i < end; ++i) {
        neighbors_of(tree, cloud, i, cfg.k, scratch, nbrs);
        double s = 0.0;
        for (std::size_t j : nbrs) s += edge_term(cloud[i], cloud[j], cfg);
        per_point[i] = s;
      }
    });
    double total = 0.0;
    for (double v : per_point) total += v;
    return total;
  }

  // Symmetric: point i owns edge {i, j} when i < j, or when j did not list i.
  std::vector<std::vector<std::size_t>> lists(n);
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    std::vector<Neighbor> scratch;
    for (std::size_t i = begin; i < end; ++i) {
      neighbors_of(tree, cloud, i, cfg.k, scratch, lists[i]);
      std::sort(lists[i].begin(), lists[i].end());
    }
  });
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j : lists[i]) {
      const bool mutual = std::binary_search(lists[j].begin(), lists[j].end(), i);
      if (mutual && j < i) continue;
      total += edge_term(cloud[i], cloud[j], cfg);
    }
  }
  return total;
}

void SigmaSearchConfig::validate() const {
  if (!(sigma_lo > 0.0) || !(sigma_hi > sigma_lo) || !std::isfinite(sigma_hi))
    throw InvalidInput("sigma search bracket must satisfy 0 < sigma_lo < sigma_hi");
  if (!(tolerance > 0.0)) throw InvalidInput("sigma search tolerance must be positive");
  if (grid_points < 3) throw InvalidInput("sigma search needs at least 3 grid points");
  if (max_evals < grid_points) throw InvalidInput("max_evals must cover the grid pre-scan");
}

SigmaEstimate estimate_sigma(const PointCloud& cloud, std::span<const Vec3> scores,
                             const TvpcConfig& tvcfg, const SigmaSearchConfig& scfg,
                             double kernel_variance) {
  scfg.validate();
  tvcfg.validate();
  if (scores.size() != cloud.size()) throw InvalidInput("one score per point is required");
  if (!(kernel_variance >= 0.0)) throw InvalidInput("kernel variance must be non-negative");

  SigmaEstimate est;
  auto g = [&](double sigma) {
    const double value = tv_pc(tweedie_update(cloud, scores, sigma * sigma + kernel_variance), tvcfg);
    est.curve.push_back({sigma, value});
    ++est.evaluations;
    return value;
  };

  const double log_lo = std::log(scfg.sigma_lo);
  const double log_hi = std::log(scfg.sigma_hi);
  const std::size_t m = scfg.grid_points;
  std::vector<double> grid_log(m), grid_val(m);
  for (std::size_t i = 0; i < m; ++i) {
    grid_log[i] = log_lo + (log_hi - log_lo) * static_cast<double>(i) / static_cast<double>(m - 1);
    grid_val[i] = g(std::exp(grid_log[i]));
  }

  const auto [min_it, max_it] = std::minmax_element(grid_val.begin(), grid_val.end());
  const double span = *max_it - *min_it;
  if (!(span > 1e-12 * std::max(1.0, std::abs(*max_it)))) {
    est.flat = true;
    est.sigma_star = scfg.sigma_lo;
    std::sort(est.curve.begin(), est.curve.end(),
              [](const auto& a, const auto& b) { return a.sigma < b.sigma; });
    return est;
  }

  // Unimodal: non-increasing up to the first minimum, non-decreasing after.
  const auto best = static_cast<std::size_t>(min_it - grid_val.begin());
  for (std::size_t i = 1; i <= best; ++i)
    if (grid_val[i] > grid_val[i - 1]) est.unimodal = false;
  for (std::size_t i = best + 1; i < m; ++i)
    if (grid_val[i] < grid_val[i - 1]) est.unimodal = false;

  if (est.unimodal) {
    double a = grid_log[best == 0 ? 0 : best - 1];
    double b = grid_log[std::min(best + 1, m - 1)];
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double gc = g(std::exp(c));
    double gd = g(std::exp(d));
    while (est.evaluations < scfg.max_evals && std::exp(b) - std::exp(a) > scfg.tolerance) {
      if (gc <= gd) {
        b = d;
        d = c;
        gd = gc;
        c = b - inv_phi * (b - a);
        gc = g(std::exp(c));
      } else {
        a = c;
        c = d;
        gc = gd;
        d = a + inv_phi * (b - a);
        gd = g(std::exp(d));
      }
    }
  }

  std::sort(est.curve.begin(), est.curve.end(), [](const auto& a, const auto& b) {
    return a.sigma < b.sigma || (a.sigma == b.sigma && a.tvpc < b.tvpc);
  });
  const auto arg = std::min_element(est.curve.begin(), est.curve.end(),
                                    [](const auto& a, const auto& b) { return a.tvpc < b.tvpc; });
  est.sigma_star = arg->sigma;
  return est;
}

SigmaEstimate estimate_sigma(const PointCloud& cloud, const ScoreField& field,
                             const TvpcConfig& tvcfg, const SigmaSearchConfig& scfg,
                             double kernel_variance) {
  const std::vector<Vec3> scores = field.evaluate(cloud.points());
  return estimate_sigma(cloud, scores, tvcfg, scfg, kernel_variance);
}

}  // namespace pcdn
