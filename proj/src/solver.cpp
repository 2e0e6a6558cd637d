#include "mvls/solver.hpp"

#include <chrono>
#include <cmath>
#include <iostream>
#include <memory>
#include <stdexcept>

#include "mvls/rng.hpp"

namespace mvls::solver {

namespace {

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

std::vector<double> alpha_column(const DenseMatrix& alphas, Index k) {
  std::vector<double> a(static_cast<std::size_t>(alphas.rows()));
  for (Index j = 0; j < alphas.rows(); ++j) a[static_cast<std::size_t>(j)] = alphas(j, k);
  return a;
}

}  // namespace

AssembledSystem assemble(const LevelSetProblem& problem, const FeatureBasis& basis,
                         const CollocationSet& colloc, double eta, Index component,
                         par::Exec exec) {
  const Index m0 = basis.input_dim;
  if (m0 != problem.extended_dim())
    throw std::invalid_argument("assemble: basis and problem dimension mismatch");
  const Index n_i = colloc.n_interior();
  const Index n_b = colloc.n_boundary();
  if (n_i == 0 || n_b == 0) throw std::invalid_argument("assemble: empty collocation set");
  const Index m = basis.feature_count();
  const Index n_rhs = component < 0 ? problem.components : 1;

  if (n_i + n_b < m)
    std::cerr << "warning: assemble has fewer collocation points (" << (n_i + n_b)
              << ") than features (" << m << "); minimum-norm fit\n";

  AssembledSystem sys;
  sys.n_interior = n_i;
  sys.n_boundary = n_b;
  sys.interior_weight =
      std::sqrt(problem.domain.space_time_volume() / static_cast<double>(n_i));
  sys.boundary_weight =
      std::sqrt(eta * problem.domain.omega_volume() / static_cast<double>(n_b));
  sys.A = DenseMatrix(n_i + n_b, m);
  sys.B = DenseMatrix(n_i + n_b, n_rhs);

  const double w_i = sys.interior_weight;
  const double w_b = sys.boundary_weight;
  const Index dy = problem.dim_y();

  par::for_each_index(exec, n_i, [&](Index i) {
    std::span<const double> X{colloc.interior.row(i), static_cast<std::size_t>(m0)};
    std::vector<double> direction(static_cast<std::size_t>(m0));
    direction[0] = 1.0;
    problem.velocity(X, {direction.data() + 1, static_cast<std::size_t>(dy)});
    std::vector<double> psi, dpsi;
    network::features_and_directional(basis, X, direction, psi, dpsi);
    double* row = sys.A.row(i);
    for (Index j = 0; j < m; ++j) {
      row[j] = w_i * dpsi[static_cast<std::size_t>(j)];
      if (!std::isfinite(row[j]))
        throw std::runtime_error("assemble: non-finite operator value at interior point " +
                                 std::to_string(i));
    }
  });

  par::for_each_index(exec, n_b, [&](Index i) {
    std::vector<double> X(static_cast<std::size_t>(m0), 0.0);
    for (Index k = 0; k < dy; ++k) X[static_cast<std::size_t>(1 + k)] = colloc.boundary(i, k);
    std::vector<double> psi = network::features(basis, X);
    double* row = sys.A.row(n_i + i);
    for (Index j = 0; j < m; ++j) {
      row[j] = w_b * psi[static_cast<std::size_t>(j)];
      if (!std::isfinite(row[j]))
        throw std::runtime_error("assemble: non-finite feature value at boundary point " +
                                 std::to_string(i));
    }
    std::span<const double> Y{colloc.boundary.row(i), static_cast<std::size_t>(dy)};
    for (Index c = 0; c < n_rhs; ++c) {
      Index comp = component < 0 ? c : component;
      double g = problem.boundary_data[static_cast<std::size_t>(comp)](Y);
      if (!std::isfinite(g))
        throw std::runtime_error("assemble: non-finite boundary data at point " +
                                 std::to_string(i));
      sys.B(n_i + i, c) = w_b * g;
    }
  });

  return sys;
}

FitResult fit(const AssembledSystem& system, par::Exec exec) {
  FitResult out;
  auto sol = numerics::solve_lsq(system.A, system.B, exec);
  out.alphas = std::move(sol.x);
  out.report = std::move(sol.report);
  out.orthogonality_defect = 0.0;
  for (Index c = 0; c < out.alphas.cols(); ++c) {
    std::vector<double> x = alpha_column(out.alphas, c);
    std::vector<double> b(static_cast<std::size_t>(system.B.rows()));
    for (Index i = 0; i < system.B.rows(); ++i) b[static_cast<std::size_t>(i)] = system.B(i, c);
    out.orthogonality_defect = std::max(
        out.orthogonality_defect, numerics::residual_orthogonality(system.A, x, b, exec));
  }
  return out;
}

double empirical_loss(const LevelSetProblem& problem, const FeatureBasis& basis,
                      std::span<const double> alpha, const CollocationSet& colloc,
                      double eta, Index component, par::Exec exec) {
  const Index m0 = basis.input_dim;
  const Index dy = problem.dim_y();
  const Index n_i = colloc.n_interior();
  const Index n_b = colloc.n_boundary();
  const Index m = basis.feature_count();
  if (static_cast<Index>(alpha.size()) != m)
    throw std::invalid_argument("empirical_loss: coefficient length mismatch");

  std::vector<double> sq(static_cast<std::size_t>(n_i));
  par::for_each_index(exec, n_i, [&](Index i) {
    std::span<const double> X{colloc.interior.row(i), static_cast<std::size_t>(m0)};
    std::vector<double> direction(static_cast<std::size_t>(m0));
    direction[0] = 1.0;
    problem.velocity(X, {direction.data() + 1, static_cast<std::size_t>(dy)});
    std::vector<double> psi, dpsi;
    network::features_and_directional(basis, X, direction, psi, dpsi);
    double g = 0.0;
    for (Index j = 0; j < m; ++j)
      g += alpha[static_cast<std::size_t>(j)] * dpsi[static_cast<std::size_t>(j)];
    sq[static_cast<std::size_t>(i)] = g * g;
  });
  double interior = 0.0;
  for (double v : sq) interior += v;
  interior *= problem.domain.space_time_volume() / static_cast<double>(n_i);

  std::vector<double> sqb(static_cast<std::size_t>(n_b));
  par::for_each_index(exec, n_b, [&](Index i) {
    std::vector<double> X(static_cast<std::size_t>(m0), 0.0);
    for (Index k = 0; k < dy; ++k) X[static_cast<std::size_t>(1 + k)] = colloc.boundary(i, k);
    std::vector<double> psi = network::features(basis, X);
    double v = 0.0;
    for (Index j = 0; j < m; ++j)
      v += alpha[static_cast<std::size_t>(j)] * psi[static_cast<std::size_t>(j)];
    std::span<const double> Y{colloc.boundary.row(i), static_cast<std::size_t>(dy)};
    double g = problem.boundary_data[static_cast<std::size_t>(component)](Y);
    sqb[static_cast<std::size_t>(i)] = (v - g) * (v - g);
  });
  double boundary = 0.0;
  for (double v : sqb) boundary += v;
  boundary *= eta * problem.domain.omega_volume() / static_cast<double>(n_b);

  return interior + boundary;
}

std::vector<double> residuals(const LevelSetProblem& problem, const FeatureBasis& basis,
                              std::span<const double> alpha, const DenseMatrix& points,
                              par::Exec exec) {
  const Index m0 = basis.input_dim;
  const Index dy = problem.dim_y();
  const Index m = basis.feature_count();
  if (points.cols() != m0)
    throw std::invalid_argument("residuals: point dimension mismatch");
  std::vector<double> out(static_cast<std::size_t>(points.rows()));
  par::for_each_index(exec, points.rows(), [&](Index i) {
    std::span<const double> X{points.row(i), static_cast<std::size_t>(m0)};
    std::vector<double> direction(static_cast<std::size_t>(m0));
    direction[0] = 1.0;
    problem.velocity(X, {direction.data() + 1, static_cast<std::size_t>(dy)});
    std::vector<double> psi, dpsi;
    network::features_and_directional(basis, X, direction, psi, dpsi);
    double g = 0.0;
    for (Index j = 0; j < m; ++j)
      g += alpha[static_cast<std::size_t>(j)] * dpsi[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(i)] = std::fabs(g);
  });
  return out;
}

std::string to_string(Stage s) {
  switch (s) {
    case Stage::coarse: return "coarse";
    case Stage::adapted: return "adapted";
    case Stage::grown: return "grown";
  }
  return "?";
}

collocation::ComponentEvaluator make_evaluator(const Solution& solution) {
  auto basis = std::make_shared<FeatureBasis>(solution.basis);
  auto alphas = std::make_shared<DenseMatrix>(solution.alphas);
  return [basis, alphas](std::span<const double> X, std::span<double> out) {
    std::vector<double> psi = network::features(*basis, X);
    for (Index c = 0; c < alphas->cols(); ++c) {
      double v = 0.0;
      for (Index j = 0; j < alphas->rows(); ++j)
        v += (*alphas)(j, c) * psi[static_cast<std::size_t>(j)];
      out[static_cast<std::size_t>(c)] = v;
    }
  };
}

PipelineError::PipelineError(const std::string& what, std::string stage,
                             std::vector<StageReport> completed)
    : std::runtime_error(what), failed_stage(std::move(stage)),
      completed_stages(std::move(completed)) {}

namespace {

// Near-zero pool for error-indicator selection: refined zero-set cloud of the
// current solution, restricted to the stage-2 tube of the component.
zeroset::PointCloud growth_pool(const LevelSetProblem& problem, const Solution& solution,
                                const PipelineConfig& config) {
  const Index m0 = problem.extended_dim();
  zeroset::SeedGrid grid;
  grid.lo.resize(static_cast<std::size_t>(m0));
  grid.hi.resize(static_cast<std::size_t>(m0));
  grid.lo[0] = 0.0;
  grid.hi[0] = problem.domain.t_final;
  for (Index k = 0; k < problem.dim_y(); ++k) {
    double lo = problem.domain.lo[static_cast<std::size_t>(k)];
    double hi = problem.domain.hi[static_cast<std::size_t>(k)];
    double pad = 0.1 * (hi - lo) / 2.0;  // 10% inflation per side
    grid.lo[static_cast<std::size_t>(1 + k)] = lo - pad;
    grid.hi[static_cast<std::size_t>(1 + k)] = hi + pad;
  }
  grid.counts = config.zero_grid;

  auto evaluator = make_evaluator(solution);
  const Index k_comp = solution.alphas.cols();
  DenseMatrix seeds;
  if (k_comp == 1) {
    zeroset::ScalarEvaluator phi = [&](std::span<const double> X) {
      double v;
      evaluator(X, {&v, 1});
      return v;
    };
    seeds = zeroset::detect_seeds_scalar(phi, grid, config.exec);
  } else {
    seeds = zeroset::detect_seeds_vector(evaluator, k_comp, grid, config.eps0, config.exec);
  }
  zeroset::ScalarEvaluator objective = [&](std::span<const double> X) {
    std::vector<double> v(static_cast<std::size_t>(k_comp));
    evaluator(X, v);
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
  };
  return zeroset::refine(objective, seeds, grid.spacings(), config.zero_iterations,
                         config.exec);
}

}  // namespace

PipelineResult solve_pipeline(const LevelSetProblem& problem,
                              const PipelineConfig& config) {
  PipelineResult result;
  const Index k_comp = problem.components;
  const Index m0 = problem.extended_dim();
  std::string stage_name = "coarse";
  try {
    // Stage 1: coarse fit on the initial draw.
    double t0 = now_seconds();
    FeatureBasis basis = network::init_first_layer(
        m0, config.m1, config.r1, rng::derive_seed(config.seed, 1));
    CollocationSet initial = collocation::sample_initial(
        config.sampling, problem.domain, rng::derive_seed(config.seed, 2));
    AssembledSystem sys = assemble(problem, basis, initial, config.eta, -1, config.exec);
    FitResult f = fit(sys, config.exec);

    Solution sol;
    sol.basis = std::move(basis);
    sol.alphas = std::move(f.alphas);
    sol.colloc.assign(static_cast<std::size_t>(k_comp), initial);
    sol.stage = Stage::coarse;
    sol.loss.resize(static_cast<std::size_t>(k_comp));
    StageReport rep;
    rep.stage = "coarse";
    rep.features = sol.basis.feature_count();
    rep.lsq_defect = f.orthogonality_defect;
    rep.lsq_rank = f.report.rank_estimate;
    rep.rank_deficient = f.report.rank_deficient;
    for (Index c = 0; c < k_comp; ++c) {
      sol.loss[static_cast<std::size_t>(c)] =
          empirical_loss(problem, sol.basis, alpha_column(sol.alphas, c),
                         sol.colloc[static_cast<std::size_t>(c)], config.eta, c,
                         config.exec);
      rep.n_interior.push_back(initial.n_interior());
      rep.n_boundary.push_back(initial.n_boundary());
      rep.loss.push_back(sol.loss[static_cast<std::size_t>(c)]);
    }
    rep.seconds = now_seconds() - t0;
    result.stages.push_back(rep);

    // Stage 2: tube update and refit (per component), possibly cycled.
    stage_name = "adapted";
    std::vector<CollocationSet> tube_sets;
    for (int cycle = 1; cycle <= std::max(1, config.tube.update_cycles); ++cycle) {
      t0 = now_seconds();
      auto evaluator = make_evaluator(sol);
      collocation::TubeResult tubes = collocation::adapt_tube(
          evaluator, k_comp, problem.domain, config.tube,
          rng::derive_seed(config.seed, 100 + static_cast<std::uint64_t>(cycle)),
          config.exec);
      StageReport trep;
      trep.stage = cycle == 1 ? "adapted" : ("adapted_cycle" + std::to_string(cycle));
      trep.features = sol.basis.feature_count();
      for (Index c = 0; c < k_comp; ++c) {
        const CollocationSet& set = tubes.per_component[static_cast<std::size_t>(c)];
        AssembledSystem csys = assemble(problem, sol.basis, set, config.eta, c, config.exec);
        FitResult cf = fit(csys, config.exec);
        for (Index j = 0; j < sol.alphas.rows(); ++j) sol.alphas(j, c) = cf.alphas(j, 0);
        trep.lsq_defect = std::max(trep.lsq_defect, cf.orthogonality_defect);
        trep.lsq_rank = cf.report.rank_estimate;
        trep.rank_deficient = trep.rank_deficient || cf.report.rank_deficient;
        trep.n_interior.push_back(set.n_interior());
        trep.n_boundary.push_back(set.n_boundary());
      }
      sol.colloc = std::move(tubes.per_component);
      sol.stage = Stage::adapted;
      for (Index c = 0; c < k_comp; ++c) {
        sol.loss[static_cast<std::size_t>(c)] =
            empirical_loss(problem, sol.basis, alpha_column(sol.alphas, c),
                           sol.colloc[static_cast<std::size_t>(c)], config.eta, c,
                           config.exec);
        trep.loss.push_back(sol.loss[static_cast<std::size_t>(c)]);
      }
      trep.seconds = now_seconds() - t0;
      result.stages.push_back(trep);
    }

    // Stage 3: layer growth, refit on the stage-2 tube after each entry.
    for (std::size_t g = 0; g < config.growth.size(); ++g) {
      stage_name = "grown" + std::to_string(g + 1);
      t0 = now_seconds();
      const auto& entry = config.growth[g];
      zeroset::PointCloud pool = growth_pool(problem, sol, config);

      for (Index c = 0; c < k_comp; ++c) {
        // membership in the component's tube, re-evaluated with the current fit
        std::vector<double> alpha = alpha_column(sol.alphas, c);
        DenseMatrix vals = network::evaluate_many(sol.basis, sol.alphas, pool.points,
                                                  config.exec);
        std::vector<Index> in_tube;
        for (Index i = 0; i < pool.points.rows(); ++i)
          if (std::fabs(vals(i, c)) <= config.tube.eps) in_tube.push_back(i);
        if (static_cast<Index>(in_tube.size()) < entry.width)
          throw std::runtime_error(
              "growth pool too small: component " + std::to_string(c) + " has " +
              std::to_string(in_tube.size()) + " points in the tube, needs " +
              std::to_string(entry.width));
        DenseMatrix pool_pts(static_cast<Index>(in_tube.size()), m0);
        for (std::size_t i = 0; i < in_tube.size(); ++i)
          for (Index k = 0; k < m0; ++k)
            pool_pts(static_cast<Index>(i), k) = pool.points(in_tube[i], k);

        std::vector<double> res =
            residuals(problem, sol.basis, alpha, pool_pts, config.exec);
        std::vector<Index> top = collocation::select_error_points(res, entry.width);
        DenseMatrix err_pts(entry.width, m0);
        for (Index i = 0; i < entry.width; ++i)
          for (Index k = 0; k < m0; ++k) err_pts(i, k) = pool_pts(top[static_cast<std::size_t>(i)], k);

        network::GrowthParams params;
        params.width = entry.width;
        params.range = entry.range;
        FeatureBasis grown = network::grow_layer(
            sol.basis, alpha, err_pts, params,
            rng::derive_seed(config.seed,
                             1000 + 10 * static_cast<std::uint64_t>(g) +
                                 static_cast<std::uint64_t>(c)));
        // previous coefficients extend with zeros over the new features
        DenseMatrix padded(grown.feature_count(), k_comp, 0.0);
        for (Index j = 0; j < sol.alphas.rows(); ++j)
          for (Index cc = 0; cc < k_comp; ++cc) padded(j, cc) = sol.alphas(j, cc);
        sol.basis = std::move(grown);
        sol.alphas = std::move(padded);
      }

      StageReport grep;
      grep.stage = "grown" + std::to_string(g + 1);
      grep.features = sol.basis.feature_count();
      for (Index c = 0; c < k_comp; ++c) {
        const CollocationSet& set = sol.colloc[static_cast<std::size_t>(c)];
        AssembledSystem csys = assemble(problem, sol.basis, set, config.eta, c, config.exec);
        FitResult cf = fit(csys, config.exec);
        if (cf.alphas.rows() != sol.alphas.rows())
          throw std::logic_error("growth refit shape mismatch");
        for (Index j = 0; j < sol.alphas.rows(); ++j) sol.alphas(j, c) = cf.alphas(j, 0);
        grep.lsq_defect = std::max(grep.lsq_defect, cf.orthogonality_defect);
        grep.lsq_rank = cf.report.rank_estimate;
        grep.rank_deficient = grep.rank_deficient || cf.report.rank_deficient;
        grep.n_interior.push_back(set.n_interior());
        grep.n_boundary.push_back(set.n_boundary());
      }
      sol.stage = Stage::grown;
      for (Index c = 0; c < k_comp; ++c) {
        sol.loss[static_cast<std::size_t>(c)] =
            empirical_loss(problem, sol.basis, alpha_column(sol.alphas, c),
                           sol.colloc[static_cast<std::size_t>(c)], config.eta, c,
                           config.exec);
        grep.loss.push_back(sol.loss[static_cast<std::size_t>(c)]);
      }
      grep.seconds = now_seconds() - t0;
      result.stages.push_back(grep);
    }

    result.solution = std::move(sol);
    return result;
  } catch (const PipelineError&) {
    throw;
  } catch (const std::exception& e) {
    throw PipelineError(e.what(), stage_name, result.stages);
  }
}

}  // namespace mvls::solver
