#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mvls/zeroset.hpp"

using namespace mvls::zeroset;
using mvls::numerics::DenseMatrix;
using mvls::numerics::Index;
using mvls::par::Exec;

namespace {
constexpr double kPi = 3.14159265358979323846;

SeedGrid grid2d(Index n, double lo, double hi) {
  SeedGrid g;
  g.lo = {lo, lo};
  g.hi = {hi, hi};
  g.counts = {n, n};
  return g;
}

double sine_curve(std::span<const double> x) { return std::sin(kPi * x[0]) - x[1]; }

// Dense-sample distance to the curve x2 = sin(pi x1).
double dist_to_sine_curve(std::span<const double> p) {
  double best = 1e300;
  for (int i = 0; i <= 20000; ++i) {
    double x1 = -0.1 + 1.2 * static_cast<double>(i) / 20000.0;
    double x2 = std::sin(kPi * x1);
    double d = std::hypot(p[0] - x1, p[1] - x2);
    best = std::min(best, d);
  }
  return best;
}

}  // namespace

TEST_CASE("scalar seeds land near the sine curve") {
  SeedGrid g = grid2d(50, -0.1, 1.1);
  DenseMatrix seeds = detect_seeds_scalar(sine_curve, g);
  CHECK(seeds.rows() > 0);
  auto h = g.spacings();
  double diag = std::hypot(h[0], h[1]);
  for (Index i = 0; i < seeds.rows(); ++i)
    CHECK(dist_to_sine_curve({seeds.row(i), 2}) <= diag);
}

TEST_CASE("constant sign field yields no seeds") {
  SeedGrid g = grid2d(20, -1.0, 1.0);
  DenseMatrix seeds = detect_seeds_scalar([](std::span<const double>) { return 1.0; }, g);
  CHECK(seeds.rows() == 0);
}

TEST_CASE("1-D sign change brackets the origin") {
  SeedGrid g;
  g.lo = {-1.0};
  g.hi = {1.0};
  g.counts = {10};  // even count, no node exactly at zero
  DenseMatrix seeds =
      detect_seeds_scalar([](std::span<const double> x) { return x[0]; }, g);
  REQUIRE(seeds.rows() == 2);
  CHECK(seeds(0, 0) < 0.0);
  CHECK(seeds(1, 0) > 0.0);
  CHECK(seeds(1, 0) - seeds(0, 0) == doctest::Approx(2.0 / 9.0));
}

TEST_CASE("vector seeds cluster at the joint zero") {
  SeedGrid g = grid2d(21, -1.0, 1.0);
  VectorEvaluator phi = [](std::span<const double> x, std::span<double> out) {
    out[0] = x[0];
    out[1] = x[1];
  };
  DenseMatrix seeds = detect_seeds_vector(phi, 2, g, 0.5);
  CHECK(seeds.rows() > 0);
  for (Index i = 0; i < seeds.rows(); ++i) {
    CHECK(std::fabs(seeds(i, 0)) <= 0.15);
    CHECK(std::fabs(seeds(i, 1)) <= 0.15);
  }

  // eps0 = 0 keeps exact zeros only (the grid has a node at the origin).
  DenseMatrix exact = detect_seeds_vector(phi, 2, g, 0.0);
  REQUIRE(exact.rows() == 1);
  CHECK(exact(0, 0) == 0.0);
  CHECK(exact(0, 1) == 0.0);
}

TEST_CASE("refinement objective is monotone per point per iteration") {
  SeedGrid g = grid2d(50, -0.1, 1.1);
  DenseMatrix seeds = detect_seeds_scalar(sine_curve, g);
  auto obj = [](std::span<const double> x) { return std::fabs(sine_curve(x)); };
  auto h = g.spacings();
  PointCloud prev = refine(obj, seeds, h, 1);
  std::vector<double> step = h;
  for (int it = 2; it <= 5; ++it) {
    for (double& s : step) s *= 0.5;
    PointCloud next = refine(obj, prev.points, step, 1);
    for (Index i = 0; i < next.size(); ++i)
      CHECK(next.values[static_cast<std::size_t>(i)] <=
            prev.values[static_cast<std::size_t>(i)] + 1e-15);
    prev = std::move(next);
  }
}

TEST_CASE("five refinement sweeps shrink the sine-curve objective") {
  SeedGrid g = grid2d(50, -0.1, 1.1);
  DenseMatrix seeds = detect_seeds_scalar(sine_curve, g);
  auto obj = [](std::span<const double> x) { return std::fabs(sine_curve(x)); };
  std::vector<double> initial(static_cast<std::size_t>(seeds.rows()));
  for (Index i = 0; i < seeds.rows(); ++i) initial[static_cast<std::size_t>(i)] = obj({seeds.row(i), 2});
  PointCloud cloud = refine(obj, seeds, g.spacings(), 5);
  std::vector<double> final_vals = cloud.values;
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  CHECK(median(final_vals) <= median(initial) / 8.0);
}

TEST_CASE("1-D argmin walk from 0.3") {
  DenseMatrix seed(1, 1);
  seed(0, 0) = 0.3;
  std::vector<double> h = {0.2};
  PointCloud cloud =
      refine([](std::span<const double> x) { return std::fabs(x[0]); }, seed, h, 5);
  CHECK(std::fabs(cloud.points(0, 0)) <= 0.0125);
}

TEST_CASE("step halving is exact") {
  // Downhill walk toward a far-away zero moves by exactly h0 / 2^(k-1) per
  // sweep: after five sweeps the position is h0 * (2 - 2^-4).
  DenseMatrix seed(1, 1);
  seed(0, 0) = 0.0;
  std::vector<double> h = {1.0};
  PointCloud cloud =
      refine([](std::span<const double> x) { return std::fabs(x[0] - 10.0); }, seed, h, 5);
  CHECK(cloud.points(0, 0) == 1.9375);
}

TEST_CASE("tie-break picks the lexicographically smallest offset") {
  // Constant objective: no strict improvement anywhere, the center stays.
  DenseMatrix seed(1, 2);
  seed(0, 0) = 0.4;
  seed(0, 1) = -0.2;
  std::vector<double> h = {0.1, 0.1};
  PointCloud cloud =
      refine([](std::span<const double>) { return 1.0; }, seed, h, 3);
  CHECK(cloud.points(0, 0) == 0.4);
  CHECK(cloud.points(0, 1) == -0.2);
}

TEST_CASE("refine determinism and serial == parallel") {
  SeedGrid g = grid2d(30, -0.1, 1.1);
  DenseMatrix seeds = detect_seeds_scalar(sine_curve, g);
  auto obj = [](std::span<const double> x) { return std::fabs(sine_curve(x)); };
  PointCloud a = refine(obj, seeds, g.spacings(), 5, Exec::Parallel);
  PointCloud b = refine(obj, seeds, g.spacings(), 5, Exec::Serial);
  REQUIRE(a.size() == b.size());
  for (Index i = 0; i < a.size(); ++i) {
    CHECK(a.points(i, 0) == b.points(i, 0));
    CHECK(a.points(i, 1) == b.points(i, 1));
    CHECK(a.values[static_cast<std::size_t>(i)] == b.values[static_cast<std::size_t>(i)]);
  }
}

TEST_CASE("project identity and filters") {
  PointCloud cloud;
  cloud.points = DenseMatrix(3, 2);
  cloud.points(0, 0) = 0.0;
  cloud.points(0, 1) = 0.0;
  cloud.points(1, 0) = 1.0;
  cloud.points(1, 1) = 1.0;
  cloud.points(2, 0) = 5.0;
  cloud.points(2, 1) = 5.0;
  cloud.values = {0.1, 0.2, 0.3};

  std::vector<Index> all = {0, 1};
  PointCloud same = project(cloud, all);
  CHECK(same.size() == 3);
  CHECK(same.points(2, 1) == 5.0);

  DenseMatrix ref(2, 2);
  ref(0, 0) = 0.0;
  ref(0, 1) = 0.0;
  ref(1, 0) = 1.0;
  ref(1, 1) = 1.0;
  NearestFilter inf_filter{&ref, 1, std::numeric_limits<double>::infinity()};
  CHECK(project(cloud, all, inf_filter).size() == 3);

  NearestFilter tight{&ref, 1, 0.5};
  PointCloud filtered = project(cloud, all, tight);
  REQUIRE(filtered.size() == 2);
  CHECK(filtered.points(1, 0) == 1.0);

  std::vector<Index> onlyx = {0};
  PointCloud proj = project(cloud, onlyx);
  CHECK(proj.points.cols() == 1);
  CHECK(proj.points(2, 0) == 5.0);
  CHECK(proj.values[2] == 0.3);
}

TEST_CASE("cloud csv round trip") {
  PointCloud cloud;
  cloud.points = DenseMatrix(2, 3);
  cloud.points(0, 0) = 0.1;
  cloud.points(0, 1) = -0.25;
  cloud.points(0, 2) = 1.0 / 3.0;
  cloud.points(1, 0) = 2e-17;
  cloud.points(1, 1) = 1234.5678;
  cloud.points(1, 2) = -0.0;
  cloud.values = {1e-9, 0.5};
  save_cloud_csv(cloud, {"t", "x", "z"}, "cloud_roundtrip_test.csv");
  PointCloud loaded = load_cloud_csv("cloud_roundtrip_test.csv");
  REQUIRE(loaded.size() == 2);
  for (Index i = 0; i < 2; ++i) {
    for (Index k = 0; k < 3; ++k) CHECK(loaded.points(i, k) == cloud.points(i, k));
    CHECK(loaded.values[static_cast<std::size_t>(i)] ==
          cloud.values[static_cast<std::size_t>(i)]);
  }
  std::remove("cloud_roundtrip_test.csv");
}
