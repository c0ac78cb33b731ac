#include <benchmark/benchmark.h>

#include "pcdn/kdtree.hpp"
#include "pcdn/metrics.hpp"
#include "pcdn/noise.hpp"
#include "pcdn/score.hpp"
#include "pcdn/training.hpp"
#include "pcdn/tvpc.hpp"
#include "pcdn/tweedie.hpp"
#include "pcdn_cli/commands.hpp"

using namespace pcdn;

namespace {

// Normalized noisy sphere fixture at 2% noise.
PointCloud noisy_sphere(std::size_t n) {
  NoiseSpec spec;
  spec.level = 0.02;
  spec.seed = 1;
  return normalize_to_unit_sphere(add_gaussian_noise(cli::fixture_cloud("sphere", n), spec).cloud)
      .first;
}

void BM_KdTreeBuild(benchmark::State& st) {
  const PointCloud c = noisy_sphere(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(KdTree(c));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}
BENCHMARK(BM_KdTreeBuild)->Arg(10000)->Arg(50000)->Unit(benchmark::kMillisecond);

void BM_KdTreeKnn16(benchmark::State& st) {
  const PointCloud c = noisy_sphere(st.range(0));
  const KdTree tree(c);
  std::vector<Neighbor> out;
  for (auto _ : st)
    for (const Vec3& p : c) {
      tree.knn(p, 16, out);
      benchmark::DoNotOptimize(out.data());
    }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}
BENCHMARK(BM_KdTreeKnn16)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_KdeScore(benchmark::State& st) {
  const PointCloud c = noisy_sphere(st.range(0));
  const ScoreField f = ScoreField::kde(c, cli::auto_kde_bandwidth(c, 1.0),
                                       KdeScore::kDefaultNeighbors, true);
  for (auto _ : st) benchmark::DoNotOptimize(evaluate_score(f, c));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}
BENCHMARK(BM_KdeScore)->Arg(10000)->Arg(50000)->Unit(benchmark::kMillisecond);

void BM_NetworkScoreAndTweedie50k(benchmark::State& st) {
  const PointCloud c = noisy_sphere(50000);
  TrainResult tr;
  tr.weights = NetworkWeights::random(64, 1);
  tr.feature_scale = median_knn_distance(c, 16);
  const ScoreField f = network_field(tr, c, 16);
  for (auto _ : st) benchmark::DoNotOptimize(tweedie_denoise(c, f, {0.02, 0.0}));
  st.SetItemsProcessed(st.iterations() * 50000);
}
BENCHMARK(BM_NetworkScoreAndTweedie50k)->Unit(benchmark::kMillisecond)->Iterations(2);

void BM_TvPc(benchmark::State& st) {
  const PointCloud c = noisy_sphere(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(tv_pc(c));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}
BENCHMARK(BM_TvPc)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_Chamfer(benchmark::State& st) {
  const PointCloud a = noisy_sphere(st.range(0));
  const PointCloud b = cli::fixture_cloud("sphere", st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(chamfer_distance(a, b));
}
BENCHMARK(BM_Chamfer)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_PointToMesh(benchmark::State& st) {
  const PointCloud a = noisy_sphere(st.range(0));
  const TriangleMesh mesh = cli::fixture_mesh("sphere");
  for (auto _ : st) benchmark::DoNotOptimize(point_to_mesh_distance(a, mesh));
}
BENCHMARK(BM_PointToMesh)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
