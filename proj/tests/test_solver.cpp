#include <doctest.h>

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "mvls/collocation.hpp"
#include "mvls/network.hpp"
#include "mvls/problems.hpp"
#include "mvls/rng.hpp"
#include "mvls/solver.hpp"

using namespace mvls::solver;
using mvls::collocation::CollocationSet;
using mvls::collocation::SamplingConfig;
using mvls::network::FeatureBasis;
using mvls::numerics::DenseMatrix;
using mvls::numerics::Index;
using mvls::par::Exec;

namespace {

CollocationSet small_colloc(const mvls::problems::LevelSetProblem& problem,
                            Index n_int, Index n_bnd, std::uint64_t seed) {
  SamplingConfig cfg;
  cfg.mode = mvls::collocation::SamplingMode::uniform_box;
  cfg.n_interior = n_int;
  cfg.n_boundary = n_bnd;
  return mvls::collocation::sample_initial(cfg, problem.domain, seed);
}

FeatureBasis small_basis(Index m0, Index width, std::uint64_t seed) {
  std::vector<double> r(static_cast<std::size_t>(m0), 2.0);
  return mvls::network::init_first_layer(m0, width, r, seed);
}

std::vector<double> column(const DenseMatrix& m, Index c) {
  std::vector<double> v(static_cast<std::size_t>(m.rows()));
  for (Index i = 0; i < m.rows(); ++i) v[static_cast<std::size_t>(i)] = m(i, c);
  return v;
}

}  // namespace

TEST_CASE("assemble shape contract and weights") {
  auto cat = mvls::problems::catalog("ex1.case1");
  FeatureBasis basis = small_basis(3, 40, 5);
  CollocationSet colloc = small_colloc(cat.problem, 120, 30, 7);
  AssembledSystem sys = assemble(cat.problem, basis, colloc, 15.0);
  CHECK(sys.A.rows() == 150);
  CHECK(sys.A.cols() == 40);
  CHECK(sys.B.rows() == 150);
  CHECK(sys.B.cols() == 1);
  // |Gamma| = |Omega|, so w_b^2 / w_i^2 = eta |Gamma| N^I / (|D| N^B).
  double ratio = (sys.boundary_weight * sys.boundary_weight) /
                 (sys.interior_weight * sys.interior_weight);
  double vol_omega = cat.problem.domain.omega_volume();
  double vol_d = cat.problem.domain.space_time_volume();
  CHECK(ratio == doctest::Approx(15.0 * vol_omega * 120.0 / (vol_d * 30.0)).epsilon(1e-12));
  // interior rows have zero right-hand side
  for (Index i = 0; i < 120; ++i) CHECK(sys.B(i, 0) == 0.0);
}

TEST_CASE("assemble operator entries match a finite difference along (1, a)") {
  auto cat = mvls::problems::catalog("ex1.case4");
  FeatureBasis basis = small_basis(3, 8, 11);
  CollocationSet colloc = small_colloc(cat.problem, 5, 3, 13);
  AssembledSystem sys = assemble(cat.problem, basis, colloc, 15.0);
  const double step = 1e-6;
  for (Index i = 0; i < 5; ++i) {
    std::vector<double> X(colloc.interior.row(i), colloc.interior.row(i) + 3);
    auto a = mvls::problems::eval_velocity(cat.problem, X);
    std::vector<double> dir = {1.0, a[0], a[1]};
    std::vector<double> xp = X, xm = X;
    for (int k = 0; k < 3; ++k) {
      xp[static_cast<std::size_t>(k)] += step * dir[static_cast<std::size_t>(k)];
      xm[static_cast<std::size_t>(k)] -= step * dir[static_cast<std::size_t>(k)];
    }
    auto fp = mvls::network::features(basis, xp);
    auto fm = mvls::network::features(basis, xm);
    for (Index j = 0; j < 8; ++j) {
      double fd = (fp[static_cast<std::size_t>(j)] - fm[static_cast<std::size_t>(j)]) /
                  (2.0 * step);
      CHECK(sys.A(i, j) / sys.interior_weight == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("fit recovers manufactured coefficients and zero data") {
  auto cat = mvls::problems::catalog("ex3.case1");
  FeatureBasis basis = small_basis(3, 30, 17);
  CollocationSet colloc = small_colloc(cat.problem, 200, 50, 19);
  AssembledSystem sys = assemble(cat.problem, basis, colloc, 15.0);

  SUBCASE("zero data gives zero coefficients") {
    for (Index i = 0; i < sys.B.rows(); ++i) sys.B(i, 0) = 0.0;
    FitResult f = fit(sys);
    for (Index j = 0; j < 30; ++j) CHECK(f.alphas(j, 0) == 0.0);
  }

  SUBCASE("construct and recover") {
    mvls::rng::Engine eng(23);
    std::vector<double> alpha_star(30);
    for (auto& a : alpha_star) a = eng.uniform(-1.0, 1.0);
    for (Index i = 0; i < sys.B.rows(); ++i) {
      double s = 0.0;
      for (Index j = 0; j < 30; ++j) s += sys.A(i, j) * alpha_star[static_cast<std::size_t>(j)];
      sys.B(i, 0) = s;
    }
    FitResult f = fit(sys);
    double num = 0.0, den = 0.0;
    for (Index j = 0; j < 30; ++j) {
      double d = f.alphas(j, 0) - alpha_star[static_cast<std::size_t>(j)];
      num += d * d;
      den += alpha_star[static_cast<std::size_t>(j)] * alpha_star[static_cast<std::size_t>(j)];
    }
    CHECK(std::sqrt(num / den) <= 1e-8);
  }

  SUBCASE("fitted loss beats random coefficients") {
    FitResult f = fit(sys);
    auto loss_of = [&](std::span<const double> alpha) {
      double s = 0.0;
      for (Index i = 0; i < sys.A.rows(); ++i) {
        double r = sys.B(i, 0);
        for (Index j = 0; j < 30; ++j) r -= sys.A(i, j) * alpha[static_cast<std::size_t>(j)];
        s += r * r;
      }
      return s;
    };
    double best = loss_of(column(f.alphas, 0));
    mvls::rng::Engine eng(29);
    for (int rep = 0; rep < 100; ++rep) {
      std::vector<double> alpha(30);
      for (auto& a : alpha) a = eng.uniform(-1.0, 1.0);
      CHECK(best <= loss_of(alpha) + 1e-12);
    }
  }
}

TEST_CASE("empirical loss equals the assembled quadratic") {
  auto cat = mvls::problems::catalog("ex1.case1");
  FeatureBasis basis = small_basis(3, 25, 31);
  CollocationSet colloc = small_colloc(cat.problem, 150, 40, 37);
  AssembledSystem sys = assemble(cat.problem, basis, colloc, 15.0);
  mvls::rng::Engine eng(41);
  for (int rep = 0; rep < 5; ++rep) {
    std::vector<double> alpha(25);
    for (auto& a : alpha) a = eng.uniform(-1.0, 1.0);
    double direct = 0.0;
    for (Index i = 0; i < sys.A.rows(); ++i) {
      double r = sys.B(i, 0);
      for (Index j = 0; j < 25; ++j) r -= sys.A(i, j) * alpha[static_cast<std::size_t>(j)];
      direct += r * r;
    }
    double loss = empirical_loss(cat.problem, basis, alpha, colloc, 15.0, 0);
    CHECK(loss == doctest::Approx(direct).epsilon(1e-10));
  }
}

TEST_CASE("empirical loss eta linearity and zero coefficients") {
  auto cat = mvls::problems::catalog("ex1.case1");
  FeatureBasis basis = small_basis(3, 10, 43);
  CollocationSet colloc = small_colloc(cat.problem, 60, 20, 47);
  std::vector<double> zero(10, 0.0);
  // alpha = 0: only the boundary misfit remains, (eta |Gamma| / N^B) sum g^2.
  double g2 = 0.0;
  for (Index i = 0; i < 20; ++i) {
    std::span<const double> Y{colloc.boundary.row(i), 2};
    double g = cat.problem.boundary_data[0](Y);
    g2 += g * g;
  }
  double expected = 15.0 * cat.problem.domain.omega_volume() * g2 / 20.0;
  CHECK(empirical_loss(cat.problem, basis, zero, colloc, 15.0, 0) ==
        doctest::Approx(expected).epsilon(1e-12));

  mvls::rng::Engine eng(53);
  std::vector<double> alpha(10);
  for (auto& a : alpha) a = eng.uniform(-0.5, 0.5);
  double l1 = empirical_loss(cat.problem, basis, alpha, colloc, 15.0, 0);
  double l2 = empirical_loss(cat.problem, basis, alpha, colloc, 30.0, 0);
  double lb = empirical_loss(cat.problem, basis, alpha, colloc, 0.0, 0);
  CHECK(l2 - l1 == doctest::Approx(l1 - lb).epsilon(1e-9));
}

TEST_CASE("residuals vanish for t-independent features in a steady problem") {
  // Velocity 0 and features without t dependence: G phi = 0 for any alpha.
  mvls::problems::DomainBox box;
  box.t_final = 1.0;
  box.lo = {-1.0, -1.0};
  box.hi = {1.0, 1.0};
  auto problem = mvls::problems::make_balance_law(
      [](std::span<const double>) { return std::vector<double>{0.0}; },
      [](std::span<const double>) { return 0.0; },
      [](std::span<const double> x) { return x[0]; }, 1, box);

  FeatureBasis basis = small_basis(3, 12, 59);
  for (Index j = 0; j < 12; ++j) basis.layers[0].weights(j, 0) = 0.0;  // kill d/dt
  mvls::rng::Engine eng(61);
  std::vector<double> alpha(12);
  for (auto& a : alpha) a = eng.uniform(-1.0, 1.0);
  DenseMatrix pts(30, 3);
  for (Index i = 0; i < 30; ++i) {
    pts(i, 0) = eng.uniform(0.0, 1.0);
    pts(i, 1) = eng.uniform(-1.0, 1.0);
    pts(i, 2) = eng.uniform(-1.0, 1.0);
  }
  auto res = residuals(problem, basis, alpha, pts);
  for (double r : res) CHECK(r == 0.0);

  // residual values are invariant under point reordering
  DenseMatrix reversed(30, 3);
  for (Index i = 0; i < 30; ++i)
    for (Index k = 0; k < 3; ++k) reversed(i, k) = pts(29 - i, k);
  auto cat = mvls::problems::catalog("ex1.case1");
  FeatureBasis b2 = small_basis(3, 12, 59);
  auto r1 = residuals(cat.problem, b2, alpha, pts);
  auto r2 = residuals(cat.problem, b2, alpha, reversed);
  for (Index i = 0; i < 30; ++i)
    CHECK(r1[static_cast<std::size_t>(i)] == r2[static_cast<std::size_t>(29 - i)]);
}

TEST_CASE("joint multi-rhs fit equals per-component fits bitwise") {
  auto cat = mvls::problems::catalog("ex3b.case1");
  FeatureBasis basis = small_basis(4, 30, 67);
  CollocationSet colloc = small_colloc(cat.problem, 150, 60, 71);
  AssembledSystem joint = assemble(cat.problem, basis, colloc, 15.0, -1);
  REQUIRE(joint.B.cols() == 2);
  FitResult fj = fit(joint);
  for (Index c = 0; c < 2; ++c) {
    AssembledSystem single = assemble(cat.problem, basis, colloc, 15.0, c);
    FitResult fs = fit(single);
    for (Index j = 0; j < 30; ++j) CHECK(fj.alphas(j, c) == fs.alphas(j, 0));
  }
}

TEST_CASE("assemble rejects non-finite boundary data") {
  mvls::problems::DomainBox box;
  box.t_final = 1.0;
  box.lo = {-1.0, -1.0};
  box.hi = {1.0, 1.0};
  auto problem = mvls::problems::make_balance_law(
      [](std::span<const double> z) { return std::vector<double>{z[0]}; },
      [](std::span<const double>) { return 0.0; },
      [](std::span<const double> x) { return 1.0 / x[0]; },  // singular at 0
      1, box);
  FeatureBasis basis = small_basis(3, 5, 73);
  CollocationSet colloc = small_colloc(problem, 10, 4, 79);
  colloc.boundary(0, 0) = 0.0;  // boundary point exactly on the singularity
  CHECK_THROWS(assemble(problem, basis, colloc, 15.0));
}
