#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mvls/collocation.hpp"
#include "mvls/network.hpp"
#include "mvls/numerics.hpp"
#include "mvls/problems.hpp"
#include "mvls/zeroset.hpp"

namespace mvls::solver {

using collocation::CollocationSet;
using network::FeatureBasis;
using numerics::DenseMatrix;
using numerics::Index;
using numerics::LsqReport;
using problems::LevelSetProblem;

// Least-squares system for the empirical transport loss: interior rows carry
// the operator d/dt + a . grad_Y applied to each feature, boundary rows the
// features themselves; rows are scaled so that ||A alpha - b||^2 equals the
// empirical loss. Row order is interior first, then boundary.
struct AssembledSystem {
  DenseMatrix A;
  DenseMatrix B;  // one column per requested component
  Index n_interior = 0;
  Index n_boundary = 0;
  double interior_weight = 0.0;
  double boundary_weight = 0.0;
};

// component = -1 assembles all K right-hand sides; otherwise just g_k.
AssembledSystem assemble(const LevelSetProblem& problem, const FeatureBasis& basis,
                         const CollocationSet& colloc, double eta,
                         Index component = -1,
                         par::Exec exec = par::Exec::Parallel);

struct FitResult {
  DenseMatrix alphas;  // M x K
  LsqReport report;
  double orthogonality_defect = 0.0;  // max over right-hand sides
};

// Least-squares fit; all right-hand sides share one factorization. The
// optimality defect is certified against the original matrix.
FitResult fit(const AssembledSystem& system, par::Exec exec = par::Exec::Parallel);

// (|D|/N^I) sum |G phi|^2 + (eta |Gamma|/N^B) sum |phi - g_k|^2 for one
// component; equals ||A alpha_k - b_k||^2 of the assembled system.
double empirical_loss(const LevelSetProblem& problem, const FeatureBasis& basis,
                      std::span<const double> alpha, const CollocationSet& colloc,
                      double eta, Index component,
                      par::Exec exec = par::Exec::Parallel);

// |G phi(X)| at each point (rows of `points` are extended points).
std::vector<double> residuals(const LevelSetProblem& problem, const FeatureBasis& basis,
                              std::span<const double> alpha, const DenseMatrix& points,
                              par::Exec exec = par::Exec::Parallel);

enum class Stage { coarse, adapted, grown };

std::string to_string(Stage s);

struct PipelineConfig {
  collocation::SamplingConfig sampling;
  collocation::TubeConfig tube;
  Index m1 = 0;
  std::vector<double> r1;
  std::vector<problems::GrowthEntry> growth;
  double eta = 15.0;
  std::uint64_t seed = 1;

  // zero-set extraction used for the growth pool
  std::vector<Index> zero_grid;
  int zero_iterations = 5;
  double eps0 = 0.3;  // vector-seed threshold when K > 1

  par::Exec exec = par::Exec::Parallel;
};

struct StageReport {
  std::string stage;
  Index features = 0;
  std::vector<Index> n_interior;  // per component
  std::vector<Index> n_boundary;
  std::vector<double> loss;       // per component
  double lsq_defect = 0.0;        // max over solves in the stage
  Index lsq_rank = 0;
  bool rank_deficient = false;
  double seconds = 0.0;
};

struct Solution {
  FeatureBasis basis;
  DenseMatrix alphas;  // M x K
  std::vector<CollocationSet> colloc;  // per component (shared at the coarse stage)
  Stage stage = Stage::coarse;
  std::vector<double> loss;  // per component
};

struct PipelineResult {
  Solution solution;
  std::vector<StageReport> stages;
};

// Carries the reports of the stages that completed before the failure, so a
// partial run manifest can still be written.
struct PipelineError : std::runtime_error {
  PipelineError(const std::string& what, std::string stage,
                std::vector<StageReport> completed);
  std::string failed_stage;
  std::vector<StageReport> completed_stages;
};

// coarse fit on the initial normal/uniform draw, tube update + refit, then
// one growth + refit per growth entry (reusing the stage-2 tube).
PipelineResult solve_pipeline(const LevelSetProblem& problem, const PipelineConfig& config);

// Level-set evaluator phi_k(X) of a solution, suitable for the tube update
// and zero-set extraction.
collocation::ComponentEvaluator make_evaluator(const Solution& solution);

}  // namespace mvls::solver
