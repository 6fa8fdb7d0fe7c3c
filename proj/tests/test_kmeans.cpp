#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "pgen/kmeans.hpp"
#include "pgen/rng.hpp"

using namespace pgen;

TEST_CASE("two separated pairs, analytically forced optimum") {
  FeatureMatrix<double> x(4, 2);
  x << 0, 0, 0, 1, 10, 0, 10, 1;
  KMeansParams p;
  p.k = 2;
  p.seed = 42;
  ClusterModel<double> m = fit_clusters(x, p);
  CHECK(m.inertia == doctest::Approx(1.0).epsilon(1e-12));
  // centroids {(0,0.5),(10,0.5)} in some order
  std::vector<Eigen::RowVector2d> want{{0.0, 0.5}, {10.0, 0.5}};
  bool order_a = (m.centroids.row(0) - want[0]).norm() < 1e-12 && (m.centroids.row(1) - want[1]).norm() < 1e-12;
  bool order_b = (m.centroids.row(0) - want[1]).norm() < 1e-12 && (m.centroids.row(1) - want[0]).norm() < 1e-12;
  CHECK((order_a || order_b));
}

TEST_CASE("k equals n gives zero inertia") {
  Rng rng(9);
  FeatureMatrix<double> x(5, 3);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 3; ++j) x(i, j) = rng.normal();
  KMeansParams p;
  p.k = 5;
  ClusterModel<double> m = fit_clusters(x, p);
  CHECK(m.inertia == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("defaults surface the clustering settings") {
  KMeansParams p;
  CHECK(p.k == 8);
  CHECK(p.tolerance == 1e-4);
  CHECK(p.max_iter == 1000);
  CHECK(p.n_init == 10);
  FeatureMatrix<double> x = FeatureMatrix<double>::Random(20, 4);
  ClusterModel<double> m = fit_clusters(x, p);
  CHECK(m.params == p);
  CHECK(m.k == 8);
}

TEST_CASE("assignment") {
  FeatureMatrix<double> x(6, 2);
  x << 0, 0, 0, 2, 4, 0, 4, 2, 8, 0, 8, 2;
  KMeansParams p;
  p.k = 3;
  p.seed = 1;
  ClusterModel<double> m = fit_clusters(x, p);

  SUBCASE("feature equal to a centroid returns its index") {
    for (int j = 0; j < m.k; ++j) {
      Eigen::VectorXd f = m.centroids.row(j).transpose();
      CHECK(assign_cluster(m, f) == j);
    }
  }

  SUBCASE("equidistant feature ties to the lowest index") {
    ClusterModel<double> tied;
    tied.k = 4;
    tied.centroids.resize(4, 2);
    // indices 1 and 3 are exactly equidistant from the origin
    tied.centroids << 5, 5, 1, 0, 9, 9, -1, 0;
    Eigen::VectorXd f = Eigen::VectorXd::Zero(2);
    CHECK(assign_cluster(tied, f) == 1);
  }

  SUBCASE("matches brute-force nearest-centroid scan") {
    Rng rng(13);
    for (int trial = 0; trial < 200; ++trial) {
      Eigen::VectorXd f(2);
      f << rng.normal(4, 4), rng.normal(1, 2);
      int got = assign_cluster(m, f);
      int want = 0;
      double best = (f.transpose() - m.centroids.row(0)).squaredNorm();
      for (int j = 1; j < m.k; ++j) {
        double d = (f.transpose() - m.centroids.row(j)).squaredNorm();
        if (d < best) {
          best = d;
          want = j;
        }
      }
      CHECK(got == want);
    }
  }

  SUBCASE("dimension mismatch rejected") {
    Eigen::VectorXd f(5);
    f.setZero();
    CHECK_THROWS_AS(assign_cluster(m, f), std::invalid_argument);
  }
}

TEST_CASE("fit preconditions") {
  FeatureMatrix<double> x = FeatureMatrix<double>::Random(3, 2);
  KMeansParams p;
  p.k = 4;
  CHECK_THROWS_AS(fit_clusters(x, p), std::invalid_argument);
  p.k = 2;
  x(1, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(fit_clusters(x, p), std::invalid_argument);
}

TEST_CASE("fixed seed is bit-reproducible") {
  Rng rng(77);
  FeatureMatrix<double> x(40, 6);
  for (int i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  KMeansParams p;
  p.k = 4;
  p.seed = 123;
  ClusterModel<double> a = fit_clusters(x, p);
  ClusterModel<double> b = fit_clusters(x, p);
  CHECK(a.inertia == b.inertia);
  CHECK((a.centroids.array() == b.centroids.array()).all());
}

TEST_CASE("per-iteration inertia non-increasing and trace recorded") {
  Rng rng(5);
  FeatureMatrix<double> x(60, 3);
  for (int i = 0; i < x.size(); ++i) x.data()[i] = rng.normal(0, 2);
  KMeansParams p;
  p.k = 5;
  p.seed = 7;
  ClusterModel<double> m = fit_clusters(x, p);
  REQUIRE(m.inertia_trace.size() >= 1);
  for (std::size_t i = 1; i < m.inertia_trace.size(); ++i)
    CHECK(m.inertia_trace[i] <= m.inertia_trace[i - 1] * (1 + 1e-12));
  CHECK(m.inertia <= m.inertia_trace.back() * (1 + 1e-12));
}

TEST_CASE("best-of-restarts finds exhaustive optimum on tiny data") {
  Rng rng(2024);
  int hits = 0, trials = 200;
  for (int t = 0; t < trials; ++t) {
    int n = 4 + int(rng.uniform_int(5));  // 4..8
    int k = 2 + int(rng.uniform_int(2));  // 2..3
    FeatureMatrix<double> x(n, 2);
    for (int i = 0; i < x.size(); ++i) x.data()[i] = rng.normal(0, 1);
    KMeansParams p;
    p.k = k;
    p.seed = rng.next();
    ClusterModel<double> m = fit_clusters(x, p);
    double opt = oracles::exhaustive_kmeans_optimum(x.cast<double>(), k);
    CHECK(m.inertia >= opt - 1e-9);
    if (m.inertia <= opt * (1 + 1e-9) + 1e-12) ++hits;
  }
  // best-of-10 restarts should essentially always reach the optimum here
  CHECK(hits >= int(0.95 * trials));
}

TEST_CASE("inertia is monotone in k on synthetic data") {
  Rng rng(31);
  FeatureMatrix<double> x(200, 4);
  for (int i = 0; i < x.size(); ++i) x.data()[i] = rng.normal(0, 3);
  KMeansParams p8;
  p8.k = 8;
  p8.n_init = 10;
  p8.seed = 5;
  KMeansParams p64 = p8;
  p64.k = 64;
  double i8 = fit_clusters(x, p8).inertia;
  double i64 = fit_clusters(x, p64).inertia;
  // logged expectation rather than a theorem, but with n_init=10 a violation
  // here would indicate a broken fit
  CHECK(i64 <= i8);
}
