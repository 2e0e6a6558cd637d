#include <doctest.h>

#include <cmath>

#include "mvls/oracle.hpp"
#include "mvls/rng.hpp"
#include "mvls/solver.hpp"
#include "mvls/zeroset.hpp"

using namespace mvls::solver;
using mvls::numerics::DenseMatrix;
using mvls::numerics::Index;
using mvls::par::Exec;

namespace {

PipelineConfig desk_config_ex3(const mvls::problems::CatalogCase& cat, Index m1,
                               std::int64_t n_int, std::int64_t n_bnd,
                               std::int64_t n_cand) {
  PipelineConfig cfg;
  cfg.sampling.mean = cat.mean;
  cfg.sampling.variance = cat.variance;
  cfg.sampling.n_interior = n_int;
  cfg.sampling.n_boundary = n_bnd;
  cfg.tube.n_candidates = n_cand;
  cfg.tube.eps = cat.eps_tube;
  cfg.m1 = m1;
  cfg.r1 = cat.r1;
  cfg.eta = cat.eta;
  cfg.seed = 1;
  cfg.zero_grid = cat.zero_grid;
  return cfg;
}

// Zero set of the fixed-time slice phi(t0, .), filtered against the
// collocation points near that time.
DenseMatrix slice_cloud(const mvls::problems::LevelSetProblem& problem,
                        const Solution& sol, double t0, Index grid_per_dim) {
  const Index dy = problem.dim_y();
  mvls::zeroset::SeedGrid grid;
  for (Index k = 0; k < dy; ++k) {
    double lo = problem.domain.lo[static_cast<std::size_t>(k)];
    double hi = problem.domain.hi[static_cast<std::size_t>(k)];
    double pad = 0.1 * (hi - lo) / 2.0;
    grid.lo.push_back(lo - pad);
    grid.hi.push_back(hi + pad);
    grid.counts.push_back(grid_per_dim);
  }
  auto evaluator = make_evaluator(sol);
  mvls::zeroset::ScalarEvaluator phi = [&](std::span<const double> Y) {
    std::vector<double> X(static_cast<std::size_t>(1 + dy));
    X[0] = t0;
    for (Index k = 0; k < dy; ++k) X[static_cast<std::size_t>(1 + k)] = Y[static_cast<std::size_t>(k)];
    double v;
    evaluator(X, {&v, 1});
    return v;
  };
  DenseMatrix seeds = mvls::zeroset::detect_seeds_scalar(phi, grid);
  mvls::zeroset::ScalarEvaluator objective = [&](std::span<const double> Y) {
    return std::fabs(phi(Y));
  };
  auto cloud = mvls::zeroset::refine(objective, seeds, grid.spacings(), 5);

  // collocation points within half a time unit of the slice, projected to Y
  const DenseMatrix& colloc = sol.colloc[0].interior;
  double slab = std::max(0.5, problem.domain.t_final * 0.05);
  std::vector<Index> near;
  for (Index i = 0; i < colloc.rows(); ++i)
    if (std::fabs(colloc(i, 0) - t0) <= slab) near.push_back(i);
  DenseMatrix ref(static_cast<Index>(near.size()), dy);
  for (std::size_t i = 0; i < near.size(); ++i)
    for (Index k = 0; k < dy; ++k)
      ref(static_cast<Index>(i), k) = colloc(near[i], 1 + k);
  mvls::zeroset::NearestFilter filter;
  filter.reference = &ref;
  filter.k = 5;
  filter.max_dist = 2.0 * mvls::zeroset::knn_distance_scale(ref, 5);
  std::vector<Index> keep(static_cast<std::size_t>(dy));
  for (Index k = 0; k < dy; ++k) keep[static_cast<std::size_t>(k)] = k;
  return mvls::zeroset::project(cloud, keep, filter).points;
}

}  // namespace

TEST_CASE("desk-scale ex3.case1 pipeline tracks the exact manifold") {
  auto cat = mvls::problems::catalog("ex3.case1");
  PipelineConfig cfg = desk_config_ex3(cat, 500, 5000, 1000, 31LL * 31 * 31);
  PipelineResult run = solve_pipeline(cat.problem, cfg);

  CHECK(run.solution.stage == Stage::adapted);  // empty growth schedule
  REQUIRE(run.stages.size() == 2);
  CHECK(run.stages[0].stage == "coarse");
  CHECK(run.stages[1].stage == "adapted");
  // fits stay certified
  for (const auto& s : run.stages) CHECK(s.lsq_defect <= 1e-6);

  // extracted slices sit within 1e-2 of the manifold p = x / (t + 1)
  for (double t0 : {0.0, 5.0, 10.0}) {
    DenseMatrix sl = slice_cloud(cat.problem, run.solution, t0, 100);
    std::vector<std::vector<double>> kept;
    for (Index i = 0; i < sl.rows(); ++i)
      if (std::fabs(sl(i, 0)) <= 1.5) kept.push_back({sl(i, 0), sl(i, 1)});
    REQUIRE(kept.size() > 50);
    DenseMatrix cl(static_cast<Index>(kept.size()), 2);
    for (std::size_t i = 0; i < kept.size(); ++i) {
      cl(static_cast<Index>(i), 0) = kept[i][0];
      cl(static_cast<Index>(i), 1) = kept[i][1];
    }
    DenseMatrix exact(8001, 2);
    for (Index i = 0; i <= 8000; ++i) {
      double x = -1.5 + 3.0 * static_cast<double>(i) / 8000.0;
      exact(i, 0) = x;
      exact(i, 1) = x / (t0 + 1.0);
    }
    auto rep = mvls::oracle::chamfer(cl, exact);
    CHECK(rep.mean_ab <= 1e-2);   // every extracted point lies on the manifold
    CHECK(rep.mean_ba <= 6e-2);   // and the manifold is covered at cloud density
  }
}

TEST_CASE("tube refit improves interior residuals at most tube points") {
  auto cat = mvls::problems::catalog("ex3.case1");
  PipelineConfig cfg = desk_config_ex3(cat, 500, 5000, 1000, 51LL * 51 * 51);

  // replicate the first two stages by hand to hold on to the coarse fit
  auto basis = mvls::network::init_first_layer(3, cfg.m1, cfg.r1,
                                               mvls::rng::derive_seed(cfg.seed, 1));
  auto initial = mvls::collocation::sample_initial(cfg.sampling, cat.problem.domain,
                                                   mvls::rng::derive_seed(cfg.seed, 2));
  auto sys = assemble(cat.problem, basis, initial, cfg.eta);
  auto coarse = fit(sys);

  Solution coarse_sol;
  coarse_sol.basis = basis;
  coarse_sol.alphas = coarse.alphas;
  auto evaluator = make_evaluator(coarse_sol);
  auto tubes = mvls::collocation::adapt_tube(evaluator, 1, cat.problem.domain, cfg.tube,
                                             mvls::rng::derive_seed(cfg.seed, 101));
  const auto& tube_set = tubes.per_component[0];
  auto refit_sys = assemble(cat.problem, basis, tube_set, cfg.eta);
  auto refit = fit(refit_sys);

  std::vector<double> a0(static_cast<std::size_t>(coarse.alphas.rows()));
  std::vector<double> a1(a0.size());
  for (Index j = 0; j < coarse.alphas.rows(); ++j) {
    a0[static_cast<std::size_t>(j)] = coarse.alphas(j, 0);
    a1[static_cast<std::size_t>(j)] = refit.alphas(j, 0);
  }
  auto res0 = residuals(cat.problem, basis, a0, tube_set.interior);
  auto res1 = residuals(cat.problem, basis, a1, tube_set.interior);
  Index improved = 0;
  for (std::size_t i = 0; i < res0.size(); ++i)
    if (res1[i] <= res0[i]) ++improved;
  CHECK(static_cast<double>(improved) >= 0.9 * static_cast<double>(res0.size()));
}

TEST_CASE("growth keeps the tube fit monotone and nests features") {
  auto cat = mvls::problems::catalog("ex3.case1");
  PipelineConfig cfg = desk_config_ex3(cat, 200, 2500, 500, 12000);
  cfg.zero_grid = {30, 30, 30};
  cfg.growth = {{80, {5.0, 5.0, 5.0}}};
  PipelineResult run = solve_pipeline(cat.problem, cfg);

  CHECK(run.solution.stage == Stage::grown);
  REQUIRE(run.stages.size() == 3);
  CHECK(run.solution.basis.feature_count() == 280);
  double adapted_loss = run.stages[1].loss[0];
  double grown_loss = run.stages[2].loss[0];
  CHECK(grown_loss <= adapted_loss * (1.0 + 1e-12) + 1e-12);
}

TEST_CASE("pipeline determinism: serial equals parallel bitwise") {
  auto cat = mvls::problems::catalog("ex3.case1");
  PipelineConfig cfg = desk_config_ex3(cat, 120, 1200, 300, 6000);
  cfg.exec = Exec::Parallel;
  PipelineResult a = solve_pipeline(cat.problem, cfg);
  cfg.exec = Exec::Serial;
  PipelineResult b = solve_pipeline(cat.problem, cfg);
  REQUIRE(a.solution.alphas.rows() == b.solution.alphas.rows());
  for (Index j = 0; j < a.solution.alphas.rows(); ++j)
    CHECK(a.solution.alphas(j, 0) == b.solution.alphas(j, 0));
  CHECK(a.solution.loss[0] == b.solution.loss[0]);
}

TEST_CASE("pipeline failure carries the completed stages") {
  auto cat = mvls::problems::catalog("ex3.case1");
  PipelineConfig cfg = desk_config_ex3(cat, 120, 1200, 300, 6000);
  cfg.zero_grid = {8, 8, 8};        // far too coarse a pool
  cfg.growth = {{5000, {5.0, 5.0, 5.0}}};  // unachievable growth width
  try {
    solve_pipeline(cat.problem, cfg);
    CHECK(false);
  } catch (const PipelineError& e) {
    CHECK(e.failed_stage == "grown1");
    CHECK(e.completed_stages.size() == 2);
  }
}
