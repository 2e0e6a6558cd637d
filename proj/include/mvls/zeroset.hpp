#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mvls/numerics.hpp"
#include "mvls/parallel.hpp"

namespace mvls::zeroset {

using numerics::DenseMatrix;
using numerics::Index;

// Axis-aligned search box with a tensor grid resolution per dimension.
struct SeedGrid {
  std::vector<double> lo, hi;
  std::vector<Index> counts;  // >= 2 per dimension

  Index dim() const { return static_cast<Index>(counts.size()); }
  std::vector<double> spacings() const;
  void validate() const;
};

struct ZeroSetConfig {
  int iterations = 5;      // refinement sweeps, step halves each time
  double eps0 = 0.0;       // vector-seed residual threshold (K >= 2)
};

struct PointCloud {
  DenseMatrix points;          // n x dim
  std::vector<double> values;  // |phi| or ||Phi||_2 at each point

  Index size() const { return points.rows(); }
};

using ScalarEvaluator = std::function<double(std::span<const double>)>;
using VectorEvaluator =
    std::function<void(std::span<const double>, std::span<double>)>;

// Grid nodes whose axis-neighbor signs are mixed (or whose value is exactly
// zero). Both sides of a crossing are kept.
DenseMatrix detect_seeds_scalar(const ScalarEvaluator& phi, const SeedGrid& grid,
                                par::Exec exec = par::Exec::Parallel);

// Vector-valued case: keeps nodes with ||Phi||_2 <= eps0 AND a mixed-sign
// axis neighborhood in every component.
DenseMatrix detect_seeds_vector(const VectorEvaluator& phi, Index components,
                                const SeedGrid& grid, double eps0,
                                par::Exec exec = par::Exec::Parallel);

// Local argmin walk over the 3^dim tensor stencil, step halved per
// iteration; ties resolve to the lexicographically smallest offset. The
// objective is non-increasing per point because the stencil contains the
// center.
PointCloud refine(const ScalarEvaluator& objective, const DenseMatrix& seeds,
                  std::span<const double> initial_steps, int iterations,
                  par::Exec exec = par::Exec::Parallel);

struct NearestFilter {
  const DenseMatrix* reference = nullptr;  // e.g. the collocation interior
  Index k = 1;                             // k-th nearest neighbor
  double max_dist = 0.0;
};

// Drops the coordinates not listed in keep_dims; if a filter is given, points
// farther than max_dist from their k-th nearest reference point (measured in
// the original space) are removed first.
PointCloud project(const PointCloud& cloud, std::span<const Index> keep_dims,
                   const std::optional<NearestFilter>& filter = std::nullopt,
                   par::Exec exec = par::Exec::Parallel);

// Median distance from reference points to their k-th nearest other
// reference point (computed on a deterministic strided sample); a
// data-driven scale for NearestFilter::max_dist.
double knn_distance_scale(const DenseMatrix& reference, Index k,
                          Index sample_cap = 2000,
                          par::Exec exec = par::Exec::Parallel);

// Primary plotting artifact: coordinate columns plus the objective value.
void save_cloud_csv(const PointCloud& cloud, const std::vector<std::string>& names,
                    const std::string& path);
PointCloud load_cloud_csv(const std::string& path);

}  // namespace mvls::zeroset
