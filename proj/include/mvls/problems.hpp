#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mvls/numerics.hpp"

namespace mvls::problems {

using numerics::DenseMatrix;
using numerics::Index;

// Augmented space-time box D = (0,T) x Omega together with an assessment
// window (target) inside Omega.
struct DomainBox {
  double t_final = 0.0;
  std::vector<double> lo, hi;          // Omega bounds per Y dimension
  std::vector<double> target_lo, target_hi;  // assessment sub-box

  Index dim_y() const { return static_cast<Index>(lo.size()); }
  double omega_volume() const;
  double space_time_volume() const { return t_final * omega_volume(); }
  bool contains_y(std::span<const double> y) const;
  void validate() const;
};

enum class Formulation { balance_law, hj_gradient, hj_full };

std::string to_string(Formulation f);

// K linear transport components sharing one characteristic velocity field
// a(X) on the extended domain, with Dirichlet data g_k on {0} x Omega.
struct LevelSetProblem {
  Formulation formulation = Formulation::balance_law;
  Index dim_x = 0;       // spatial dimension d
  Index components = 0;  // K
  DomainBox domain;
  bool strict_domain = false;

  // a(X) with X = (t, Y); writes dim_y() values.
  std::function<void(std::span<const double>, std::span<double>)> velocity;
  // g_k(Y) on the inflow boundary.
  std::vector<std::function<double(std::span<const double>)>> boundary_data;

  Index dim_y() const { return domain.dim_y(); }
  Index extended_dim() const { return 1 + dim_y(); }  // m0

  // Coordinate names in cloud/CSV order: t first, then Y.
  std::vector<std::string> coordinate_names() const;
};

std::vector<double> eval_velocity(const LevelSetProblem& problem,
                                  std::span<const double> X);

using ScalarFn = std::function<double(std::span<const double>)>;
using VectorFn = std::function<std::vector<double>(std::span<const double>)>;

// u_t + F(u) . grad u + q(x, u) = 0 lifted to phi(t, x, z).
LevelSetProblem make_balance_law(VectorFn flux, ScalarFn source, ScalarFn initial_u,
                                 Index dim_x, DomainBox domain);

// Gradient-field lift of S_t + H(x, grad S) = 0 to phi_i(t, x, p).
LevelSetProblem make_hj_gradient(VectorFn grad_h_x, VectorFn grad_h_p,
                                 VectorFn grad_s0, Index dim_x, DomainBox domain);

// Full lift carrying z = S as well: phi_i(t, x, z, p), K = d + 1.
LevelSetProblem make_hj_full(ScalarFn hamiltonian, VectorFn grad_h_x, VectorFn grad_h_p,
                             ScalarFn s0, VectorFn grad_s0, Index dim_x, DomainBox domain);

// A jump of the initial data at a point (1-D) or along an axis line (2-D);
// the exact manifold carries a transported vertical segment there.
struct InitialJump {
  std::vector<double> location;  // x position of the jump (1-D: single entry)
  double z_lo = 0.0, z_hi = 0.0;
};

// Closed-form problem data needed by the characteristics oracle.
struct OracleSpec {
  ScalarFn initial_u;          // balance law u0
  ScalarFn potential_prime;    // V'(x), 1-D balance law (null when V = 0)
  ScalarFn s0;                 // HJ initial phase
  VectorFn grad_s0;            // HJ initial momentum field
  ScalarFn potential;          // V(x) in H = |p|^2/2 + V
  std::function<void(std::span<const double>, DenseMatrix&)> hess_s0;  // for implicit solves
  std::vector<InitialJump> jumps;
  std::vector<double> x0_lo, x0_hi;  // parameter window for manifold sampling
};

struct GrowthEntry {
  Index width = 0;
  std::vector<double> range;
};

// Everything Tables 1-5 prescribe for one experiment, plus the zero-set and
// oracle settings the artifact needs to reproduce a run from the id alone.
struct CatalogCase {
  std::string id;
  LevelSetProblem problem;

  // sampling
  std::int64_t n_interior = 0;
  std::int64_t n_boundary = 0;
  std::vector<double> mean, variance;

  // adaptive tube
  std::int64_t n_candidates = 0;
  double eps_tube = 0.0;

  // network
  Index m1 = 2000;
  std::vector<double> r1;
  std::vector<GrowthEntry> growth;

  double eta = 15.0;

  // zero-set extraction defaults
  std::vector<Index> zero_grid;  // per extended dimension
  double eps0 = 0.3;             // vector-seed residual threshold (artifact choice)

  OracleSpec oracle;
};

CatalogCase catalog(const std::string& case_id);
std::vector<std::string> catalog_ids();

}  // namespace mvls::problems
