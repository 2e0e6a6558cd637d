#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mvls/numerics.hpp"
#include "mvls/parallel.hpp"
#include "mvls/problems.hpp"

namespace mvls::collocation {

using numerics::DenseMatrix;
using numerics::Index;
using problems::DomainBox;

// Interior rows are extended points (t, Y); boundary rows are Y points on
// the inflow boundary {0} x Omega.
struct CollocationSet {
  DenseMatrix interior;  // n_interior x (1 + dim_y)
  DenseMatrix boundary;  // n_boundary x dim_y

  Index n_interior() const { return interior.rows(); }
  Index n_boundary() const { return boundary.rows(); }
};

enum class SamplingMode { normal_initial, uniform_box };

struct SamplingConfig {
  SamplingMode mode = SamplingMode::normal_initial;
  std::vector<double> mean, variance;  // per Y dimension (normal mode)
  std::int64_t n_interior = 0;
  std::int64_t n_boundary = 0;
};

// Initial collocation draw: t ~ U(0, T); Y ~ Normal(mean, diag(variance)) in
// normal mode or uniform over Omega in uniform mode. Boundary points use the
// same Y law at t = 0. Deterministic per seed.
CollocationSet sample_initial(const SamplingConfig& config, const DomainBox& domain,
                              std::uint64_t seed);

struct TubeConfig {
  std::int64_t n_candidates = 0;
  double eps = 0.0;  // half-width in phi value
  int update_cycles = 1;
};

// Per-point evaluator of all K level-set components at an extended point.
using ComponentEvaluator =
    std::function<void(std::span<const double> X, std::span<double> values)>;

struct TubeResult {
  // One collocation set per component: component k keeps the candidates with
  // |phi_k| <= eps. For K = 1 this is the tube of the paper.
  std::vector<CollocationSet> per_component;
  std::int64_t candidates_interior = 0;
  std::int64_t candidates_boundary = 0;
};

// Uniformly samples candidates over (0, T) x Omega (and over {0} x Omega with
// count n_candidates^(dim_y / (dim_y + 1))), evaluates the coarse solution and
// keeps the tube around each component's zero level set. Throws if a
// component's tube comes back empty (eps too small).
TubeResult adapt_tube(const ComponentEvaluator& evaluator, Index components,
                      const DomainBox& domain, const TubeConfig& tube,
                      std::uint64_t seed, par::Exec exec = par::Exec::Parallel);

// Indices of the `count` pool points with the largest residual, in descending
// residual order; ties keep the earlier pool index.
std::vector<Index> select_error_points(std::span<const double> residuals, Index count);

// CSV forensics dump: kind column ("interior"/"boundary") then coordinates.
void save_collocation_csv(const CollocationSet& set,
                          const std::vector<std::string>& coord_names,
                          const std::string& path);
CollocationSet load_collocation_csv(const std::string& path);

}  // namespace mvls::collocation
