#include <cmath>
#include <limits>

#include "doctest.h"
#include "oracles.hpp"
#include "pcdn/bvh.hpp"
#include "pcdn/error.hpp"
#include "pcdn/geometry.hpp"
#include "pcdn/kdtree.hpp"
#include "pcdn/sampling.hpp"
#include "pcdn/shapes.hpp"

using namespace pcdn;

TEST_SUITE("geometry") {
  TEST_CASE("point cloud rejects empty and non-finite input") {
    CHECK_THROWS_AS(PointCloud(std::vector<Vec3>{}), InvalidInput);
    CHECK_THROWS_AS(PointCloud({{0, 0, std::nan("")}}), InvalidInput);
    CHECK_THROWS_AS(PointCloud({{0, std::numeric_limits<double>::infinity(), 0}}), InvalidInput);
    const PointCloud c({{1, 2, 3}, {4, 5, 6}});
    CHECK(c.size() == 2);
    CHECK(c[1] == Vec3{4, 5, 6});
  }

  TEST_CASE("triangle mesh validates indices and drops zero-area faces") {
    CHECK_THROWS_AS(TriangleMesh({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 3}}), InvalidInput);
    const TriangleMesh m({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {2, 0, 0}}, {{0, 1, 2}, {0, 1, 3}});
    CHECK(m.faces().size() == 1);
    CHECK(m.dropped_faces() == 1);
    CHECK(m.total_area() == doctest::Approx(0.5));
  }

  TEST_CASE("kd-tree single point returns itself") {
    const PointCloud c({{0.3, -0.2, 0.7}});
    const auto index = build_neighbor_index(c);
    const auto r = knn_query(index, c[0], 1);
    REQUIRE(r.size() == 1);
    CHECK(r[0].index == 0);
    CHECK(r[0].distance() == 0.0);
  }

  TEST_CASE("kd-tree collinear example") {
    const PointCloud c({{0, 0, 0}, {1, 0, 0}, {3, 0, 0}});
    const auto r = knn_query(build_neighbor_index(c), {0, 0, 0}, 2);
    REQUIRE(r.size() == 2);
    CHECK(r[0].index == 0);
    CHECK(r[1].index == 1);
    CHECK(r[0].distance() == 0.0);
    CHECK(r[1].distance() == 1.0);
  }

  TEST_CASE("kd-tree ties are broken by index") {
    const PointCloud c({{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}});
    const auto index = build_neighbor_index(c);
    auto r = knn_query(index, {0, 0, 0}, 1);
    CHECK(r[0].index == 0);
    r = knn_query(index, {0.5, 0.5, 0}, 4);
    REQUIRE(r.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(r[i].index == i);
      CHECK(r[i].sq_distance == r[0].sq_distance);
    }
  }

  TEST_CASE("kd-tree clamps k to the cloud size") {
    const PointCloud c = oracle::random_cloud(5, 1);
    CHECK(knn_query(build_neighbor_index(c), {0, 0, 0}, 50).size() == 5);
    CHECK_THROWS_AS(KdTree(std::vector<Vec3>{}), InvalidInput);
  }

  TEST_CASE("kd-tree matches exhaustive search") {
    struct Case {
      std::size_t n, k, queries;
      bool self;
    };
    for (const Case cs : {Case{1000, 8, 1000, true}, Case{200, 5, 50, false},
                          Case{10000, 16, 300, false}, Case{64, 64, 20, false}}) {
      const auto pts = oracle::random_points(cs.n, cs.n + cs.k);
      const KdTree tree{std::vector<Vec3>(pts)};
      const auto queries = oracle::random_points(cs.queries, 99 + cs.n, -1.2, 1.2);
      for (std::size_t qi = 0; qi < cs.queries; ++qi) {
        const Vec3 q = cs.self ? pts[qi] : queries[qi];
        const auto got = tree.knn(q, cs.k);
        const auto want = oracle::brute_knn(pts, q, cs.k);
        REQUIRE(got.size() == want.size());
        for (std::size_t j = 0; j < got.size(); ++j) {
          CHECK(got[j].index == want[j].first);
          CHECK(got[j].sq_distance == want[j].second);
        }
      }
    }
  }

  TEST_CASE("kd-tree handles many duplicate points") {
    std::vector<Vec3> pts(300, Vec3{0.5, 0.5, 0.5});
    for (std::size_t i = 0; i < 100; ++i) pts.push_back({i * 0.01, 0, 0});
    const KdTree tree{std::vector<Vec3>(pts)};
    const auto got = tree.knn({0.5, 0.5, 0.5}, 10);
    for (std::size_t j = 0; j < 10; ++j) CHECK(got[j].index == j);
    const auto want = oracle::brute_knn(pts, {0.2, 0.1, 0}, 40);
    const auto got2 = tree.knn({0.2, 0.1, 0}, 40);
    for (std::size_t j = 0; j < 40; ++j) CHECK(got2[j].index == want[j].first);
  }

  TEST_CASE("radius search matches exhaustive filtering") {
    const auto pts = oracle::random_points(2000, 5);
    const KdTree tree{std::vector<Vec3>(pts)};
    const Vec3 q{0.1, -0.2, 0.05};
    const auto got = tree.radius_search(q, 0.3);
    auto all = oracle::brute_knn(pts, q, pts.size());
    std::size_t expected = 0;
    for (const auto& [i, d2] : all)
      if (d2 <= 0.09) ++expected;
    REQUIRE(got.size() == expected);
    for (std::size_t j = 0; j < got.size(); ++j) CHECK(got[j].index == all[j].first);
  }

  TEST_CASE("point-triangle distance analytic cases") {
    const Vec3 a{0, 0, 0}, b{1, 0, 0}, c{0, 1, 0};
    CHECK(point_triangle_sq_distance({0.2, 0.2, 0}, a, b, c) == 0.0);
    CHECK(point_triangle_sq_distance({0.2, 0.3, 0.05}, a, b, c) ==
          doctest::Approx(0.0025).epsilon(1e-14));
    CHECK(point_triangle_sq_distance({-1, -1, 0}, a, b, c) == doctest::Approx(2.0));
    CHECK(point_triangle_sq_distance({1, 1, 0}, a, b, c) == doctest::Approx(0.5));
    CHECK_THROWS_AS(point_triangle_sq_distance({0, 0, 1}, a, b, {2, 0, 0}), InvalidInput);
    CHECK_THROWS_AS(point_triangle_sq_distance({0, 0, 1}, a, a, c), InvalidInput);
  }

  TEST_CASE("point-triangle distance matches dense sampling of the triangle") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    constexpr int kGrid = 1414;  // about 10^6 barycentric samples
    for (int trial = 0; trial < 4; ++trial) {
      const Vec3 a{u(rng), u(rng), u(rng)}, b{u(rng), u(rng), u(rng)}, c{u(rng), u(rng), u(rng)};
      const Vec3 p{2 * u(rng), 2 * u(rng), 2 * u(rng)};
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i <= kGrid; ++i) {
        for (int j = 0; i + j <= kGrid; ++j) {
          const double s = double(i) / kGrid, t = double(j) / kGrid;
          const Vec3 x = a + (b - a) * s + (c - a) * t;
          best = std::min(best, squared_distance(p, x));
        }
      }
      const double got = point_triangle_sq_distance(p, a, b, c);
      CHECK(got <= best * (1 + 1e-12));
      CHECK(oracle::rel_err(got, best) <= 1e-6);
    }
  }

  TEST_CASE("point-triangle distance matches the extended-precision oracle") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 20000; ++trial) {
      const Vec3 a{u(rng), u(rng), u(rng)}, b{u(rng), u(rng), u(rng)}, c{u(rng), u(rng), u(rng)};
      const Vec3 p{2 * u(rng), 2 * u(rng), 2 * u(rng)};
      const double want = static_cast<double>(oracle::point_triangle_sq(p, a, b, c));
      CHECK(oracle::rel_err(point_triangle_sq_distance(p, a, b, c), want, 1e-300) <= 1e-9);
    }
  }

  TEST_CASE("point-triangle distance is continuous across regions") {
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const Vec3 a{0, 0, 0}, b{1, 0.1, 0}, c{0.2, 1, 0.1};
    const double delta = 1e-4;
    for (int trial = 0; trial < 5000; ++trial) {
      const Vec3 p{1.5 * u(rng), 1.5 * u(rng), 0.3 * u(rng)};
      Vec3 dir{u(rng), u(rng), u(rng)};
      dir = dir / norm(dir);
      const double d0 = point_triangle_sq_distance(p, a, b, c);
      const double d1 = point_triangle_sq_distance(p + dir * delta, a, b, c);
      const double dist = std::sqrt(d0);
      CHECK(std::abs(d1 - d0) <= 2 * dist * delta + delta * delta + 1e-15);
    }
  }

  TEST_CASE("normalize to unit sphere") {
    SUBCASE("already normalized cloud gives the identity transform") {
      const PointCloud c({{1, 0, 0}, {-1, 0, 0}, {0, 0.5, 0}, {0, -0.5, 0}});
      const auto [out, t] = normalize_to_unit_sphere(c);
      CHECK(t.center == Vec3{0, 0, 0});
      CHECK(t.radius == 1.0);
      CHECK(out == c);
    }
    SUBCASE("two points") {
      const auto [out, t] = normalize_to_unit_sphere(PointCloud({{0, 0, 0}, {2, 0, 0}}));
      CHECK(t.center == Vec3{1, 0, 0});
      CHECK(t.radius == 1.0);
      CHECK(out[0] == Vec3{-1, 0, 0});
      CHECK(out[1] == Vec3{1, 0, 0});
    }
    SUBCASE("coincident points keep radius 1") {
      const auto [out, t] = normalize_to_unit_sphere(PointCloud({{3, 3, 3}, {3, 3, 3}}));
      CHECK(t.radius == 1.0);
      CHECK(out[0] == Vec3{0, 0, 0});
    }
    SUBCASE("round trip") {
      const PointCloud c = oracle::random_cloud(5000, 3, -40.0, 75.0);
      const auto [out, t] = normalize_to_unit_sphere(c);
      double max_norm = 0;
      for (const Vec3& p : out) max_norm = std::max(max_norm, norm(p));
      CHECK(max_norm <= 1.0 + 1e-15);
      CHECK(max_norm == doctest::Approx(1.0).epsilon(1e-14));
      const PointCloud back = t.invert(out);
      for (std::size_t i = 0; i < c.size(); ++i) CHECK(distance(back[i], c[i]) <= 1e-12);
    }
  }

  TEST_CASE("uniform mesh sampling") {
    const auto square = oracle::unit_square();
    SUBCASE("law of large numbers on the unit square") {
      const PointCloud s = sample_mesh(square, 100000, 7);
      const Vec3 m = s.centroid();
      CHECK(std::abs(m.x - 0.5) < 0.01);
      CHECK(std::abs(m.y - 0.5) < 0.01);
      CHECK(m.z == 0.0);
    }
    SUBCASE("single triangle, one sample lies on it") {
      const TriangleMesh tri({{0, 0, 0}, {1, 0, 0}, {0, 1, 1}}, {{0, 1, 2}});
      const PointCloud s = sample_mesh(tri, 1, 3);
      const auto t = tri.triangle(0);
      CHECK(point_triangle_sq_distance(s[0], t[0], t[1], t[2]) <= 1e-30);
    }
    SUBCASE("deterministic per seed") {
      CHECK(sample_mesh(square, 500, 11) == sample_mesh(square, 500, 11));
      CHECK_FALSE(sample_mesh(square, 500, 11) == sample_mesh(square, 500, 12));
    }
    SUBCASE("errors") {
      CHECK_THROWS_AS(sample_mesh(square, 0, 1), InvalidInput);
      const TriangleMesh flat({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}}, {{0, 1, 2}});
      CHECK_THROWS_AS(sample_mesh(flat, 10, 1), InvalidInput);
    }
  }

  TEST_CASE("blue-noise sampling spreads points further apart than uniform") {
    const auto square = oracle::unit_square();
    auto min_pair = [](const PointCloud& c) {
      const KdTree tree(c);
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < c.size(); ++i) best = std::min(best, tree.knn(c[i], 2)[1].sq_distance);
      return std::sqrt(best);
    };
    double uni = 0, blue = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      uni += min_pair(sample_mesh(square, 1000, seed, SamplingMode::uniform));
      const PointCloud b = sample_mesh(square, 1000, seed, SamplingMode::blue_noise);
      CHECK(b.size() == 1000);
      for (const Vec3& p : b) CHECK(p.z == 0.0);
      blue += min_pair(b);
    }
    CHECK(blue >= 0.4 * uni);
    // Elimination should in fact do much better than uniform sampling.
    CHECK(blue > 3.0 * uni);
  }

  TEST_CASE("bvh closest triangle equals exhaustive scan") {
    for (const char* name : {"sphere", "torus", "cube"}) {
      const TriangleMesh mesh = shapes::by_name(name);
      const TriangleBvh bvh(mesh);
      const auto queries = oracle::random_points(300, 41, -1.6, 1.6);
      for (const Vec3& q : queries) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_f = 0;
        for (std::size_t f = 0; f < mesh.faces().size(); ++f) {
          const auto t = mesh.triangle(f);
          const double d = point_triangle_sq_distance(q, t[0], t[1], t[2]);
          if (d < best) {
            best = d;
            best_f = f;
          }
        }
        const TriangleHit hit = bvh.closest(q);
        CHECK(hit.sq_distance == best);
        CHECK(hit.face == best_f);
      }
    }
  }

  TEST_CASE("analytic shapes are closed unit-scale surfaces") {
    for (const std::string& name : shapes::names()) {
      const TriangleMesh m = shapes::by_name(name);
      CHECK(m.faces().size() > 1000);
      CHECK(m.dropped_faces() == 0);
      CHECK(m.total_area() > 1.0);
    }
    CHECK(shapes::icosphere().total_area() == doctest::Approx(4 * M_PI).epsilon(0.01));
    CHECK_THROWS_AS(shapes::by_name("teapot"), InvalidInput);
  }
}
