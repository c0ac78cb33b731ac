#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "pcdn/error.hpp"
#include "pcdn/parallel.hpp"
#include "pcdn/sampling.hpp"
#include "pcdn/score.hpp"
#include "pcdn/shapes.hpp"

using namespace pcdn;

TEST_SUITE("score") {
  TEST_CASE("kde single source is the closed form") {
    const PointCloud src({{0.3, -0.1, 0.2}});
    const double h = 0.07;
    const ScoreField f = kde_score(src, h);
    for (const Vec3& q : oracle::random_points(20, 3)) {
      const Vec3 s = f.evaluate(q);
      const Vec3 want = (src[0] - q) / (h * h);
      CHECK(distance(s, want) <= 1e-12 * norm(want));
    }
  }

  TEST_CASE("kde midpoint of two sources has no component along their axis") {
    const PointCloud src({{-0.5, 0, 0}, {0.5, 0, 0}});
    const ScoreField f = kde_score(src, 0.3);
    const Vec3 s = f.evaluate({0.0, 0.2, -0.1});
    CHECK(s.x == 0.0);
    CHECK(s.y < 0.0);
    CHECK(s.z > 0.0);
  }

  TEST_CASE("kde score matches finite differences of the log density") {
    for (double h : {0.08, 0.15, 0.4}) {
      const auto src = oracle::random_points(100, 11);
      // All sources, so the oracle and the field see the same density.
      const ScoreField f = ScoreField::kde(PointCloud(src), h, 0);
      for (const Vec3& q : oracle::random_points(20, 12, -0.9, 0.9)) {
        const Vec3 fd = oracle::fd_log_kde_gradient(src, q, h, 1e-5);
        const Vec3 s = f.evaluate(q);
        CHECK(distance(s, fd) <= 1e-4 * norm(fd));
      }
    }
  }

  TEST_CASE("kde weight beyond 64 neighbors is negligible at small bandwidth") {
    // 10k points on the unit sphere. The 1e-12 bound holds up to h ~ 0.017;
    // at h = 0.02 the tail is ~5e-10 and at the automatic bandwidth a few
    // percent (see the next case).
    const PointCloud cloud = sample_mesh(shapes::icosphere(4), 10000, 1);
    const double h = 0.015;
    const std::vector<Vec3> pts(cloud.begin(), cloud.end());
    long double worst = 0;
    for (std::size_t i = 0; i < 100; ++i) {
      const Vec3 q = pts[i * 97] + Vec3{0.01, -0.005, 0.012};
      const auto all = oracle::brute_knn(pts, q, pts.size());
      long double total = 0, tail = 0;
      for (std::size_t j = 0; j < all.size(); ++j) {
        const long double w = std::exp(-(long double)all[j].second / (2 * h * h));
        total += w;
        if (j >= KdeScore::kDefaultNeighbors) tail += w;
      }
      worst = std::max(worst, tail / total);
    }
    CHECK(double(worst) <= 1e-12);
  }

  TEST_CASE("kde truncation changes scores little at the automatic bandwidth") {
    // At h ~ 0.057 the dropped tail weight is a few percent, yet the scores
    // stay close to the untruncated estimate.
    const PointCloud cloud = sample_mesh(shapes::icosphere(4), 4000, 2);
    const double h = 0.057;
    const ScoreField full = ScoreField::kde(cloud, h, 0);
    const ScoreField trunc = kde_score(cloud, h);
    double worst = 0;
    for (std::size_t i = 0; i < 200; ++i) {
      const Vec3 q = cloud[i * 17] * 1.02;
      const Vec3 a = full.evaluate(q);
      worst = std::max(worst, distance(a, trunc.evaluate(q)) / norm(a));
    }
    CHECK(worst < 0.1);
  }

  TEST_CASE("kde rejects a non-positive bandwidth") {
    const PointCloud c({{0, 0, 0}});
    CHECK_THROWS_AS(kde_score(c, 0.0), InvalidInput);
    CHECK_THROWS_AS(kde_score(c, -1.0), InvalidInput);
    CHECK_THROWS_AS(kde_score(c, std::nan("")), InvalidInput);
  }

  TEST_CASE("leave-one-out kde drops only coincident sources") {
    const auto src = oracle::random_points(300, 21);
    const PointCloud cloud(src);
    const double h = 0.2;
    const ScoreField plain = ScoreField::kde(cloud, h, 0, false);
    const ScoreField loo = ScoreField::kde(cloud, h, 0, true);
    // Away from the sources the two agree exactly.
    const Vec3 q{0.123, -0.456, 0.0789};
    CHECK(plain.evaluate(q) == loo.evaluate(q));
    // At a source, the leave-one-out score is the kde of the other points.
    std::vector<Vec3> rest(src.begin() + 1, src.end());
    const Vec3 want = ScoreField::kde(PointCloud(rest), h, 0).evaluate(src[0]);
    CHECK(distance(loo.evaluate(src[0]), want) <= 1e-12 * norm(want));
    // Including the self term only shrinks the vector.
    const Vec3 a = plain.evaluate(src[0]), b = loo.evaluate(src[0]);
    CHECK(std::abs(dot(a, b) / (norm(a) * norm(b)) - 1.0) < 1e-12);
    CHECK(norm(a) < norm(b));
  }

  TEST_CASE("field evaluation is pure and batch-invariant") {
    const PointCloud cloud = oracle::random_cloud(2000, 31);
    const ScoreField f = kde_score(cloud, 0.1);
    const PointCloud queries = oracle::random_cloud(3000, 32);
    set_thread_count(4);
    const auto batch = evaluate_score(f, queries);
    set_thread_count(1);
    const auto serial = evaluate_score(f, queries);
    set_thread_count(0);
    REQUIRE(batch.size() == queries.size());
    for (std::size_t i = 0; i < queries.size(); ++i) {
      CHECK(batch[i] == f.evaluate(queries[i]));
      CHECK(batch[i] == serial[i]);
      CHECK(is_finite(batch[i]));
    }
  }

  TEST_CASE("kde output is finite far from the sources") {
    const PointCloud cloud = oracle::random_cloud(100, 33);
    const ScoreField f = kde_score(cloud, 0.01);
    const Vec3 s = f.evaluate({50, -40, 30});
    CHECK(is_finite(s));
  }

  TEST_CASE("ar-dae loss examples") {
    const auto u = oracle::random_points(50, 41);
    const double sigma = 0.03;
    std::vector<Vec3> exact(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) exact[i] = u[i] * (-1.0 / sigma);
    CHECK(ar_dae_loss(exact, u, sigma) == doctest::Approx(0.0).epsilon(1e-20));
    const std::vector<Vec3> zero{{0, 0, 0}};
    const std::vector<Vec3> one{{1, 2, 2}};
    CHECK(ar_dae_loss(zero, one, 0.7) == 9.0);
    CHECK_THROWS_AS(ar_dae_loss(zero, u, 0.1), InvalidInput);
    CHECK_THROWS_AS(ar_dae_loss({}, {}, 0.1), InvalidInput);
  }

  TEST_CASE("ar-dae loss matches extended-precision recomputation") {
    const auto s = oracle::random_points(1000, 42, -30, 30);
    const auto u = oracle::random_points(1000, 43, -2, 2);
    const double sigma = 0.02;
    long double total = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      for (int a = 0; a < 3; ++a) {
        const long double r = (long double)sigma * s[i][a] + u[i][a];
        total += r * r;
      }
    }
    const double want = double(total / s.size());
    CHECK(oracle::rel_err(ar_dae_loss(s, u, sigma), want) <= 1e-10);
  }

  TEST_CASE("median knn distance") {
    // Regular 1-D lattice: every interior point has mean 2-NN distance 1.
    std::vector<Vec3> pts;
    for (int i = 0; i < 101; ++i) pts.push_back({double(i), 0, 0});
    CHECK(median_knn_distance(PointCloud(pts), 2) == 1.0);
    CHECK(median_knn_distance(PointCloud(pts), 4) == 1.5);
    CHECK_THROWS_AS(median_knn_distance(PointCloud({{0, 0, 0}}), 1), InvalidInput);
  }

  TEST_CASE("kernel variance reports the bandwidth squared") {
    const PointCloud c = oracle::random_cloud(10, 1);
    CHECK(kde_score(c, 0.25).kernel_variance() == 0.0625);
    CHECK(kde_score(c, 0.25).backend() == ScoreBackend::kde);
    CHECK(to_string(ScoreBackend::network) == "network");
  }
}
