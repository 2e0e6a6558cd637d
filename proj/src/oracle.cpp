#include "mvls/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mvls::oracle {

std::vector<double> rk4_flow(const OdeRhs& rhs, std::span<const double> state0,
                             double t_final, int steps) {
  if (steps < 1) throw std::invalid_argument("rk4_flow: steps must be positive");
  const std::size_t n = state0.size();
  std::vector<double> y(state0.begin(), state0.end());
  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
  const double h = t_final / static_cast<double>(steps);
  for (int s = 0; s < steps; ++s) {
    rhs(y, k1);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
    rhs(tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
    rhs(tmp, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
    rhs(tmp, k4);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      if (!std::isfinite(y[i]))
        throw std::runtime_error("rk4_flow: state went non-finite at step " +
                                 std::to_string(s));
    }
  }
  return y;
}

Manifold burgers_manifold(const problems::ScalarFn& u0,
                          const problems::ScalarFn& v_prime, double t,
                          std::span<const double> x0_grid,
                          std::span<const problems::InitialJump> jumps,
                          int steps_per_unit, par::Exec exec) {
  if (x0_grid.empty()) throw std::invalid_argument("burgers_manifold: empty grid");
  const Index n_smooth = static_cast<Index>(x0_grid.size());
  const Index n_jump = static_cast<Index>(jumps.size()) * n_smooth;
  Manifold m;
  m.points = DenseMatrix(n_smooth + n_jump, 2);

  auto flow = [&](double x0, double z0, double* out) {
    if (!v_prime) {
      out[0] = x0 + t * z0;
      out[1] = z0;
      return;
    }
    OdeRhs rhs = [&](std::span<const double> s, std::span<double> d) {
      d[0] = s[1];
      d[1] = -v_prime(s.subspan(0, 1));
    };
    std::vector<double> s0 = {x0, z0};
    auto end = rk4_flow(rhs, s0, t, std::max(1, static_cast<int>(std::ceil(
                                                    steps_per_unit * std::fabs(t)))));
    out[0] = end[0];
    out[1] = end[1];
  };

  par::for_each_index(exec, n_smooth, [&](Index i) {
    double x0 = x0_grid[static_cast<std::size_t>(i)];
    flow(x0, u0({&x0, 1}), m.points.row(i));
  });
  // transported vertical segments at the jumps of u0
  for (std::size_t j = 0; j < jumps.size(); ++j) {
    const auto& jump = jumps[j];
    par::for_each_index(exec, n_smooth, [&](Index i) {
      double z = jump.z_lo + (jump.z_hi - jump.z_lo) * static_cast<double>(i) /
                                 static_cast<double>(n_smooth - 1);
      flow(jump.location[0], z, m.points.row(n_smooth + static_cast<Index>(j) * n_smooth + i));
    });
  }
  return m;
}

Manifold hj_manifold(const problems::VectorFn& grad_h_x,
                     const problems::VectorFn& grad_h_p,
                     const problems::ScalarFn& hamiltonian,
                     const problems::ScalarFn& s0, const problems::VectorFn& grad_s0,
                     double t, const DenseMatrix& x0_grid, bool include_z,
                     int steps_per_unit, par::Exec exec) {
  const Index d = x0_grid.cols();
  if (x0_grid.rows() == 0) throw std::invalid_argument("hj_manifold: empty grid");
  if (include_z && !s0) throw std::invalid_argument("hj_manifold: include_z needs S0");
  Manifold m;
  m.points = DenseMatrix(x0_grid.rows(), include_z ? 2 * d + 1 : 2 * d);

  // state = (x, p, z)
  OdeRhs rhs = [&](std::span<const double> s, std::span<double> out) {
    std::vector<double> xp(s.begin(), s.begin() + 2 * d);
    std::vector<double> hp = grad_h_p(xp);
    std::vector<double> hx = grad_h_x(xp);
    double zdot = hamiltonian ? -hamiltonian(xp) : 0.0;
    for (Index k = 0; k < d; ++k) {
      out[static_cast<std::size_t>(k)] = hp[static_cast<std::size_t>(k)];
      out[static_cast<std::size_t>(d + k)] = -hx[static_cast<std::size_t>(k)];
      zdot += s[static_cast<std::size_t>(d + k)] * hp[static_cast<std::size_t>(k)];
    }
    out[static_cast<std::size_t>(2 * d)] = zdot;
  };

  const int steps =
      std::max(1, static_cast<int>(std::ceil(steps_per_unit * std::fabs(t))));
  par::for_each_index(exec, x0_grid.rows(), [&](Index i) {
    std::span<const double> x0{x0_grid.row(i), static_cast<std::size_t>(d)};
    std::vector<double> state(static_cast<std::size_t>(2 * d + 1), 0.0);
    std::vector<double> p0 = grad_s0(x0);
    for (Index k = 0; k < d; ++k) {
      state[static_cast<std::size_t>(k)] = x0[static_cast<std::size_t>(k)];
      state[static_cast<std::size_t>(d + k)] = p0[static_cast<std::size_t>(k)];
    }
    state[static_cast<std::size_t>(2 * d)] = s0 ? s0(x0) : 0.0;
    std::vector<double> end = t == 0.0 ? state : rk4_flow(rhs, state, t, steps);
    double* out = m.points.row(i);
    for (Index k = 0; k < d; ++k) out[k] = end[static_cast<std::size_t>(k)];
    if (include_z) {
      out[d] = end[static_cast<std::size_t>(2 * d)];
      for (Index k = 0; k < d; ++k) out[d + 1 + k] = end[static_cast<std::size_t>(d + k)];
    } else {
      for (Index k = 0; k < d; ++k) out[d + k] = end[static_cast<std::size_t>(d + k)];
    }
  });
  return m;
}

ImplicitResult implicit_velocity(
    const problems::VectorFn& v0,
    const std::function<void(std::span<const double>, DenseMatrix&)>& jac_v0,
    double t, std::span<const double> x) {
  const Index d = static_cast<Index>(x.size());
  ImplicitResult res;
  res.v = v0(x);
  res.converged = true;
  if (t == 0.0) return res;

  const int n_stages = std::max(1, static_cast<int>(std::ceil(t / 0.05)));
  DenseMatrix jac;
  for (int stage = 1; stage <= n_stages; ++stage) {
    double tau = t * static_cast<double>(stage) / static_cast<double>(n_stages);
    bool ok = false;
    for (int iter = 0; iter < 50; ++iter) {
      std::vector<double> y(static_cast<std::size_t>(d));
      for (Index k = 0; k < d; ++k)
        y[static_cast<std::size_t>(k)] = x[static_cast<std::size_t>(k)] -
                                         tau * res.v[static_cast<std::size_t>(k)];
      std::vector<double> f = v0(y);
      double fn = 0.0, vn = 0.0;
      for (Index k = 0; k < d; ++k) {
        f[static_cast<std::size_t>(k)] = res.v[static_cast<std::size_t>(k)] -
                                         f[static_cast<std::size_t>(k)];
        fn = std::max(fn, std::fabs(f[static_cast<std::size_t>(k)]));
        vn = std::max(vn, std::fabs(res.v[static_cast<std::size_t>(k)]));
      }
      if (fn <= 1e-12 * (1.0 + vn)) {
        ok = true;
        break;
      }
      jac_v0(y, jac);
      // J = I + tau * Jv0(y); solve J delta = f by elimination (d is tiny)
      DenseMatrix J(d, d);
      for (Index r = 0; r < d; ++r)
        for (Index c = 0; c < d; ++c)
          J(r, c) = (r == c ? 1.0 : 0.0) + tau * jac(r, c);
      std::vector<double> rhs = f;
      for (Index k = 0; k < d; ++k) {
        Index piv = k;
        for (Index r = k + 1; r < d; ++r)
          if (std::fabs(J(r, k)) > std::fabs(J(piv, k))) piv = r;
        if (std::fabs(J(piv, k)) < 1e-14) break;  // near-singular: caustic
        for (Index c = 0; c < d; ++c) std::swap(J(k, c), J(piv, c));
        std::swap(rhs[static_cast<std::size_t>(k)], rhs[static_cast<std::size_t>(piv)]);
        for (Index r = k + 1; r < d; ++r) {
          double fac = J(r, k) / J(k, k);
          for (Index c = k; c < d; ++c) J(r, c) -= fac * J(k, c);
          rhs[static_cast<std::size_t>(r)] -= fac * rhs[static_cast<std::size_t>(k)];
        }
      }
      std::vector<double> delta(static_cast<std::size_t>(d), 0.0);
      for (Index k = d - 1; k >= 0; --k) {
        double s = rhs[static_cast<std::size_t>(k)];
        for (Index c = k + 1; c < d; ++c) s -= J(k, c) * delta[static_cast<std::size_t>(c)];
        delta[static_cast<std::size_t>(k)] = J(k, k) != 0.0 ? s / J(k, k) : 0.0;
      }
      for (Index k = 0; k < d; ++k)
        res.v[static_cast<std::size_t>(k)] -= delta[static_cast<std::size_t>(k)];
    }
    if (!ok) {
      res.converged = false;
      return res;
    }
  }
  return res;
}

namespace detail {

// Returns per-query nearest distances from each row of `from` into `to`.
std::vector<double> nearest_brute(const DenseMatrix& from, const DenseMatrix& to,
                                  par::Exec exec) {
  const Index dim = from.cols();
  std::vector<double> out(static_cast<std::size_t>(from.rows()));
  par::for_each_index(exec, from.rows(), [&](Index i) {
    const double* q = from.row(i);
    double best = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < to.rows(); ++j) {
      const double* r = to.row(j);
      double d2 = 0.0;
      for (Index k = 0; k < dim; ++k) {
        double d = q[k] - r[k];
        d2 += d * d;
      }
      best = std::min(best, d2);
    }
    out[static_cast<std::size_t>(i)] = std::sqrt(best);
  });
  return out;
}

// Exact nearest neighbor through a uniform bucket grid with expanding
// Chebyshev rings; used when the pair count makes brute force unreasonable.
class BucketIndex {
 public:
  explicit BucketIndex(const DenseMatrix& pts) : pts_(pts), dim_(pts.cols()) {
    lo_.assign(static_cast<std::size_t>(dim_), std::numeric_limits<double>::infinity());
    std::vector<double> hi(static_cast<std::size_t>(dim_),
                           -std::numeric_limits<double>::infinity());
    for (Index i = 0; i < pts.rows(); ++i)
      for (Index k = 0; k < dim_; ++k) {
        lo_[static_cast<std::size_t>(k)] = std::min(lo_[static_cast<std::size_t>(k)], pts(i, k));
        hi[static_cast<std::size_t>(k)] = std::max(hi[static_cast<std::size_t>(k)], pts(i, k));
      }
    double target_cells = std::pow(static_cast<double>(pts.rows()),
                                   1.0 / static_cast<double>(dim_));
    cells_per_dim_ = std::max<Index>(1, static_cast<Index>(target_cells));
    cell_.assign(static_cast<std::size_t>(dim_), 0.0);
    min_cell_ = std::numeric_limits<double>::infinity();
    total_ = 1;
    for (Index k = 0; k < dim_; ++k) {
      double w = hi[static_cast<std::size_t>(k)] - lo_[static_cast<std::size_t>(k)];
      if (w <= 0.0) w = 1.0;
      cell_[static_cast<std::size_t>(k)] = w / static_cast<double>(cells_per_dim_);
      min_cell_ = std::min(min_cell_, cell_[static_cast<std::size_t>(k)]);
      total_ *= cells_per_dim_;
    }
    buckets_.resize(static_cast<std::size_t>(total_));
    for (Index i = 0; i < pts.rows(); ++i)
      buckets_[static_cast<std::size_t>(flat_cell(pts.row(i)))].push_back(i);
  }

  double nearest(const double* q) const {
    std::vector<Index> c(static_cast<std::size_t>(dim_));
    Index max_ring = 0;
    for (Index k = 0; k < dim_; ++k) {
      Index ck = cell_index(q, k);
      c[static_cast<std::size_t>(k)] = ck;
      Index toward_lo = ck < 0 ? -ck : ck;
      Index hi_cell = cells_per_dim_ - 1 - ck;
      Index toward_hi = hi_cell < 0 ? -hi_cell : hi_cell;
      max_ring = std::max(max_ring, std::max(toward_lo, toward_hi));
    }
    double best2 = std::numeric_limits<double>::infinity();
    for (Index ring = 0; ring <= max_ring; ++ring) {
      if (ring > 0 && best2 < std::numeric_limits<double>::infinity()) {
        // any point in a ring-rho cell is at least (rho - 1) cells away
        double bound = static_cast<double>(ring - 1) * min_cell_;
        if (bound * bound > best2) break;
      }
      scan_ring(q, c, ring, best2);
    }
    return std::sqrt(best2);
  }

 private:
  Index cell_index(const double* q, Index k) const {
    double rel = (q[k] - lo_[static_cast<std::size_t>(k)]) / cell_[static_cast<std::size_t>(k)];
    Index idx = static_cast<Index>(std::floor(rel));
    return idx;  // intentionally unclamped; ring scan clamps
  }

  Index flat_cell(const double* q) const {
    Index flat = 0;
    for (Index k = 0; k < dim_; ++k) {
      Index idx = std::clamp<Index>(cell_index(q, k), 0, cells_per_dim_ - 1);
      flat = flat * cells_per_dim_ + idx;
    }
    return flat;
  }

  // Scans every grid cell at Chebyshev distance `ring` from c.
  void scan_ring(const double* q, const std::vector<Index>& c, Index ring,
                 double& best2) const {
    std::vector<Index> idx(static_cast<std::size_t>(dim_));
    scan_rec(q, c, ring, 0, false, idx, best2);
  }

  void scan_rec(const double* q, const std::vector<Index>& c, Index ring, Index k,
                bool on_surface, std::vector<Index>& idx, double& best2) const {
    if (k == dim_) {
      if (!on_surface && ring != 0) return;
      Index flat = 0;
      for (Index j = 0; j < dim_; ++j) flat = flat * cells_per_dim_ + idx[static_cast<std::size_t>(j)];
      for (Index i : buckets_[static_cast<std::size_t>(flat)]) {
        const double* r = pts_.row(i);
        double d2 = 0.0;
        for (Index j = 0; j < dim_; ++j) {
          double d = q[j] - r[j];
          d2 += d * d;
        }
        best2 = std::min(best2, d2);
      }
      return;
    }
    for (Index off = -ring; off <= ring; ++off) {
      Index v = c[static_cast<std::size_t>(k)] + off;
      if (v < 0 || v >= cells_per_dim_) continue;
      idx[static_cast<std::size_t>(k)] = v;
      scan_rec(q, c, ring, k + 1, on_surface || (off == ring || off == -ring), idx,
               best2);
    }
  }

  const DenseMatrix& pts_;
  Index dim_;
  std::vector<double> lo_, cell_;
  Index cells_per_dim_ = 1;
  Index total_ = 1;
  double min_cell_ = 0.0;
  std::vector<std::vector<Index>> buckets_;
};

std::vector<double> nearest_bucketed(const DenseMatrix& from, const DenseMatrix& to,
                                     par::Exec exec) {
  BucketIndex index(to);
  std::vector<double> out(static_cast<std::size_t>(from.rows()));
  par::for_each_index(exec, from.rows(), [&](Index i) {
    out[static_cast<std::size_t>(i)] = index.nearest(from.row(i));
  });
  return out;
}

}  // namespace detail

ChamferReport chamfer(const DenseMatrix& a, const DenseMatrix& b, par::Exec exec) {
  if (a.rows() == 0 || b.rows() == 0)
    throw std::invalid_argument("chamfer: empty cloud");
  if (a.cols() != b.cols())
    throw std::invalid_argument("chamfer: dimension mismatch");

  const bool big = static_cast<double>(a.rows()) * static_cast<double>(b.rows()) > 1e10;
  auto d_ab = big ? detail::nearest_bucketed(a, b, exec) : detail::nearest_brute(a, b, exec);
  auto d_ba = big ? detail::nearest_bucketed(b, a, exec) : detail::nearest_brute(b, a, exec);

  auto stats = [](const std::vector<double>& d, double& mean, double& mx) {
    double s = 0.0;
    mx = 0.0;
    for (double v : d) {
      s += v;
      mx = std::max(mx, v);
    }
    mean = s / static_cast<double>(d.size());
  };
  ChamferReport rep;
  stats(d_ab, rep.mean_ab, rep.max_ab);
  stats(d_ba, rep.mean_ba, rep.max_ba);
  rep.mean_symmetric = 0.5 * (rep.mean_ab + rep.mean_ba);
  rep.max_symmetric = std::max(rep.max_ab, rep.max_ba);
  return rep;
}

std::vector<double> branch_roots(const std::function<double(double)>& f, double lo,
                                 double hi, int scan_points) {
  std::vector<double> roots;
  double prev_x = lo, prev_f = f(lo);
  if (prev_f == 0.0) roots.push_back(lo);
  for (int i = 1; i <= scan_points; ++i) {
    double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(scan_points);
    double fx = f(x);
    if (fx == 0.0) {
      roots.push_back(x);
    } else if (prev_f != 0.0 && prev_f * fx < 0.0) {
      double a = prev_x, b = x, fa = prev_f;
      for (int it = 0; it < 80; ++it) {
        double mid = 0.5 * (a + b);
        double fm = f(mid);
        if (fm == 0.0) {
          a = b = mid;
          break;
        }
        if (fa * fm < 0.0) {
          b = mid;
        } else {
          a = mid;
          fa = fm;
        }
      }
      roots.push_back(0.5 * (a + b));
    }
    prev_x = x;
    prev_f = fx;
  }
  return roots;
}

Manifold case_manifold(const CatalogCase& c, double t, Index points_per_dim,
                       int steps_per_unit, par::Exec exec) {
  using problems::Formulation;
  const auto& spec = c.oracle;
  const Index d = c.problem.dim_x;
  if (points_per_dim < 2) throw std::invalid_argument("case_manifold: need >= 2 points");

  auto linspace = [&](double lo, double hi) {
    std::vector<double> v(static_cast<std::size_t>(points_per_dim));
    for (Index i = 0; i < points_per_dim; ++i)
      v[static_cast<std::size_t>(i)] =
          lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points_per_dim - 1);
    return v;
  };

  if (c.problem.formulation == Formulation::balance_law) {
    if (!spec.initial_u) throw std::runtime_error("case_manifold: missing u0");
    if (d == 1) {
      auto grid = linspace(spec.x0_lo[0], spec.x0_hi[0]);
      return burgers_manifold(spec.initial_u, spec.potential_prime, t, grid, spec.jumps,
                              steps_per_unit, exec);
    }
    // d = 2, F(z) = (z, z), q = 0: pure translation along (1, 1).
    auto gx = linspace(spec.x0_lo[0], spec.x0_hi[0]);
    auto gy = linspace(spec.x0_lo[1], spec.x0_hi[1]);
    Manifold m;
    m.points = DenseMatrix(points_per_dim * points_per_dim, 3);
    par::for_each_index(exec, m.points.rows(), [&](Index i) {
      double x0 = gx[static_cast<std::size_t>(i / points_per_dim)];
      double y0 = gy[static_cast<std::size_t>(i % points_per_dim)];
      std::vector<double> xy = {x0, y0};
      double z = spec.initial_u(xy);
      double* row = m.points.row(i);
      row[0] = x0 + t * z;
      row[1] = y0 + t * z;
      row[2] = z;
    });
    return m;
  }

  // Hamilton-Jacobi: H = |p|^2 / 2 + V(x)
  if (!spec.grad_s0) throw std::runtime_error("case_manifold: missing grad S0");
  problems::VectorFn grad_h_p = [d](std::span<const double> xp) {
    return std::vector<double>(xp.begin() + d, xp.end());
  };
  problems::VectorFn grad_h_x = [&spec, d](std::span<const double> xp) {
    std::vector<double> g(static_cast<std::size_t>(d), 0.0);
    if (spec.potential_prime) g[0] = spec.potential_prime(xp.subspan(0, 1));
    return g;
  };
  problems::ScalarFn ham = [&spec, d](std::span<const double> xp) {
    double s = 0.0;
    for (Index k = 0; k < d; ++k) {
      double p = xp[static_cast<std::size_t>(d + k)];
      s += 0.5 * p * p;
    }
    if (spec.potential) s += spec.potential(xp.subspan(0, 1));
    return s;
  };

  DenseMatrix x0_grid;
  if (d == 1) {
    auto g = linspace(spec.x0_lo[0], spec.x0_hi[0]);
    x0_grid = DenseMatrix(points_per_dim, 1);
    for (Index i = 0; i < points_per_dim; ++i) x0_grid(i, 0) = g[static_cast<std::size_t>(i)];
  } else {
    auto gx = linspace(spec.x0_lo[0], spec.x0_hi[0]);
    auto gy = linspace(spec.x0_lo[1], spec.x0_hi[1]);
    x0_grid = DenseMatrix(points_per_dim * points_per_dim, 2);
    for (Index i = 0; i < x0_grid.rows(); ++i) {
      x0_grid(i, 0) = gx[static_cast<std::size_t>(i / points_per_dim)];
      x0_grid(i, 1) = gy[static_cast<std::size_t>(i % points_per_dim)];
    }
  }
  const bool include_z = c.problem.formulation == Formulation::hj_full;
  return hj_manifold(grad_h_x, grad_h_p, ham, spec.s0, spec.grad_s0, t, x0_grid,
                     include_z, steps_per_unit, exec);
}

}  // namespace mvls::oracle
