#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "mvls/numerics.hpp"
#include "mvls/parallel.hpp"
#include "mvls/problems.hpp"

namespace mvls::oracle {

using numerics::DenseMatrix;
using numerics::Index;
using problems::CatalogCase;

// Autonomous ODE right-hand side d state / d s = rhs(state).
using OdeRhs = std::function<void(std::span<const double>, std::span<double>)>;

// Classical fixed-step RK4; throws if the state goes non-finite.
std::vector<double> rk4_flow(const OdeRhs& rhs, std::span<const double> state0,
                             double t_final, int steps);

inline int default_steps(double t_final) {
  int s = static_cast<int>(std::ceil(1000.0 * std::fabs(t_final)));
  return s < 1 ? 1 : s;
}

// Point cloud of the exact multivalued solution at one time; the column
// layout matches the Y layout of the corresponding formulation with t
// dropped (balance law: (x, z); gradient HJ: (x, p); full HJ: (x, z, p)).
struct Manifold {
  DenseMatrix points;
};

// 1-D forced Burgers characteristics x' = z, z' = -V'(x) from z0 = u0(x0);
// closed form x = x0 + t u0(x0) when V' is null. Jumps of u0 contribute a
// transported vertical segment sampled uniformly in z.
Manifold burgers_manifold(const problems::ScalarFn& u0,
                          const problems::ScalarFn& v_prime, double t,
                          std::span<const double> x0_grid,
                          std::span<const problems::InitialJump> jumps = {},
                          int steps_per_unit = 1000,
                          par::Exec exec = par::Exec::Parallel);

// Hamiltonian characteristics x' = dH/dp, p' = -dH/dx, z' = p . dH/dp - H
// from (x0, grad S0(x0), S0(x0)); include_z selects the (x, z, p) layout.
Manifold hj_manifold(const problems::VectorFn& grad_h_x,
                     const problems::VectorFn& grad_h_p,
                     const problems::ScalarFn& hamiltonian,
                     const problems::ScalarFn& s0, const problems::VectorFn& grad_s0,
                     double t, const DenseMatrix& x0_grid, bool include_z,
                     int steps_per_unit = 1000, par::Exec exec = par::Exec::Parallel);

struct ImplicitResult {
  std::vector<double> v;
  bool converged = false;
};

// Solves v = v0(x - t v) by Newton iteration with continuation in t from
// v0(x); returns the branch continuously connected to t = 0. Non-convergence
// (caustic proximity) is flagged, not thrown.
ImplicitResult implicit_velocity(const problems::VectorFn& v0,
                                 const std::function<void(std::span<const double>, DenseMatrix&)>& jac_v0,
                                 double t, std::span<const double> x);

struct ChamferReport {
  double mean_ab = 0.0, max_ab = 0.0;  // directed A -> B
  double mean_ba = 0.0, max_ba = 0.0;  // directed B -> A
  double mean_symmetric = 0.0;         // (mean_ab + mean_ba) / 2
  double max_symmetric = 0.0;
};

// Nearest-neighbor distance statistics between two point clouds. Exact; uses
// a uniform-grid index when the pair count gets large, brute force otherwise.
ChamferReport chamfer(const DenseMatrix& a, const DenseMatrix& b,
                      par::Exec exec = par::Exec::Parallel);

namespace detail {
// Both are exact; exposed separately so tests can cross-check them.
std::vector<double> nearest_brute(const DenseMatrix& from, const DenseMatrix& to,
                                  par::Exec exec);
std::vector<double> nearest_bucketed(const DenseMatrix& from, const DenseMatrix& to,
                                     par::Exec exec);
}  // namespace detail

// All roots of f on [lo, hi] located by a dense scan plus bisection on sign
// changes (nodes with |f| == 0 count as roots).
std::vector<double> branch_roots(const std::function<double(double)>& f, double lo,
                                 double hi, int scan_points = 4096);

// Reference manifold for a catalog case at one time, built from the case's
// closed-form data; dispatches on the formulation.
Manifold case_manifold(const CatalogCase& c, double t, Index points_per_dim,
                       int steps_per_unit = 1000, par::Exec exec = par::Exec::Parallel);

}  // namespace mvls::oracle
