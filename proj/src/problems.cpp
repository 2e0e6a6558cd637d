#include "mvls/problems.hpp"

#include <cmath>
#include <stdexcept>

namespace mvls::problems {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

double DomainBox::omega_volume() const {
  double v = 1.0;
  for (std::size_t k = 0; k < lo.size(); ++k) v *= (hi[k] - lo[k]);
  return v;
}

bool DomainBox::contains_y(std::span<const double> y) const {
  for (std::size_t k = 0; k < lo.size(); ++k)
    if (y[k] < lo[k] || y[k] > hi[k]) return false;
  return true;
}

void DomainBox::validate() const {
  if (!(t_final > 0.0)) throw std::invalid_argument("DomainBox: T must be positive");
  if (lo.size() != hi.size()) throw std::invalid_argument("DomainBox: bound size mismatch");
  for (std::size_t k = 0; k < lo.size(); ++k)
    if (!(lo[k] < hi[k])) throw std::invalid_argument("DomainBox: empty interval");
  if (!target_lo.empty()) {
    if (target_lo.size() != lo.size() || target_hi.size() != lo.size())
      throw std::invalid_argument("DomainBox: target size mismatch");
    for (std::size_t k = 0; k < lo.size(); ++k)
      if (target_lo[k] < lo[k] || target_hi[k] > hi[k])
        throw std::invalid_argument("DomainBox: target not contained in Omega");
  }
}

std::string to_string(Formulation f) {
  switch (f) {
    case Formulation::balance_law: return "balance_law";
    case Formulation::hj_gradient: return "hj_gradient";
    case Formulation::hj_full: return "hj_full";
  }
  return "?";
}

std::vector<std::string> LevelSetProblem::coordinate_names() const {
  std::vector<std::string> names = {"t"};
  auto push_indexed = [&](const std::string& base, Index count) {
    if (count == 1) {
      names.push_back(base);
    } else {
      for (Index i = 1; i <= count; ++i) names.push_back(base + std::to_string(i));
    }
  };
  switch (formulation) {
    case Formulation::balance_law:
      push_indexed("x", dim_x);
      names.push_back("z");
      break;
    case Formulation::hj_gradient:
      push_indexed("x", dim_x);
      push_indexed("p", dim_x);
      break;
    case Formulation::hj_full:
      push_indexed("x", dim_x);
      names.push_back("z");
      push_indexed("p", dim_x);
      break;
  }
  return names;
}

std::vector<double> eval_velocity(const LevelSetProblem& problem,
                                  std::span<const double> X) {
  if (static_cast<Index>(X.size()) != problem.extended_dim())
    throw std::invalid_argument("eval_velocity: point dimension mismatch");
  if (problem.strict_domain) {
    if (X[0] < 0.0 || X[0] > problem.domain.t_final ||
        !problem.domain.contains_y(X.subspan(1)))
      throw std::domain_error("eval_velocity: point outside the computational domain");
  }
  std::vector<double> a(static_cast<std::size_t>(problem.dim_y()));
  problem.velocity(X, a);
  for (double v : a)
    if (!std::isfinite(v)) throw std::runtime_error("eval_velocity: non-finite velocity");
  return a;
}

LevelSetProblem make_balance_law(VectorFn flux, ScalarFn source, ScalarFn initial_u,
                                 Index dim_x, DomainBox domain) {
  domain.validate();
  if (domain.dim_y() != dim_x + 1)
    throw std::invalid_argument("make_balance_law: domain must cover (x, z)");
  LevelSetProblem p;
  p.formulation = Formulation::balance_law;
  p.dim_x = dim_x;
  p.components = 1;
  p.domain = std::move(domain);
  const Index d = dim_x;
  p.velocity = [flux, source, d](std::span<const double> X, std::span<double> a) {
    // X = (t, x, z); a = (F(z), -q(x, z))
    std::span<const double> x = X.subspan(1, static_cast<std::size_t>(d));
    const double z = X[static_cast<std::size_t>(1 + d)];
    std::vector<double> xz(x.begin(), x.end());
    xz.push_back(z);
    std::vector<double> f = flux({&z, 1});
    for (Index k = 0; k < d; ++k) a[static_cast<std::size_t>(k)] = f[static_cast<std::size_t>(k)];
    a[static_cast<std::size_t>(d)] = -source(xz);
  };
  p.boundary_data.push_back([initial_u, d](std::span<const double> Y) {
    // Y = (x, z); g = z - u0(x)
    return Y[static_cast<std::size_t>(d)] - initial_u(Y.subspan(0, static_cast<std::size_t>(d)));
  });
  return p;
}

LevelSetProblem make_hj_gradient(VectorFn grad_h_x, VectorFn grad_h_p,
                                 VectorFn grad_s0, Index dim_x, DomainBox domain) {
  domain.validate();
  if (domain.dim_y() != 2 * dim_x)
    throw std::invalid_argument("make_hj_gradient: domain must cover (x, p)");
  LevelSetProblem p;
  p.formulation = Formulation::hj_gradient;
  p.dim_x = dim_x;
  p.components = dim_x;
  p.domain = std::move(domain);
  const Index d = dim_x;
  p.velocity = [grad_h_x, grad_h_p, d](std::span<const double> X, std::span<double> a) {
    // X = (t, x, p); a = (dH/dp, -dH/dx)
    std::vector<double> xp(X.begin() + 1, X.end());
    std::vector<double> hp = grad_h_p(xp);
    std::vector<double> hx = grad_h_x(xp);
    for (Index k = 0; k < d; ++k) {
      a[static_cast<std::size_t>(k)] = hp[static_cast<std::size_t>(k)];
      a[static_cast<std::size_t>(d + k)] = -hx[static_cast<std::size_t>(k)];
    }
  };
  for (Index i = 0; i < d; ++i) {
    p.boundary_data.push_back([grad_s0, d, i](std::span<const double> Y) {
      std::vector<double> g = grad_s0(Y.subspan(0, static_cast<std::size_t>(d)));
      return Y[static_cast<std::size_t>(d + i)] - g[static_cast<std::size_t>(i)];
    });
  }
  return p;
}

LevelSetProblem make_hj_full(ScalarFn hamiltonian, VectorFn grad_h_x, VectorFn grad_h_p,
                             ScalarFn s0, VectorFn grad_s0, Index dim_x, DomainBox domain) {
  domain.validate();
  if (domain.dim_y() != 2 * dim_x + 1)
    throw std::invalid_argument("make_hj_full: domain must cover (x, z, p)");
  LevelSetProblem p;
  p.formulation = Formulation::hj_full;
  p.dim_x = dim_x;
  p.components = dim_x + 1;
  p.domain = std::move(domain);
  const Index d = dim_x;
  p.velocity = [hamiltonian, grad_h_x, grad_h_p, d](std::span<const double> X,
                                                    std::span<double> a) {
    // X = (t, x, z, p); a = (dH/dp, p . dH/dp - H, -dH/dx)
    std::vector<double> xp;
    xp.reserve(static_cast<std::size_t>(2 * d));
    for (Index k = 0; k < d; ++k) xp.push_back(X[static_cast<std::size_t>(1 + k)]);
    for (Index k = 0; k < d; ++k) xp.push_back(X[static_cast<std::size_t>(2 + d + k)]);
    std::vector<double> hp = grad_h_p(xp);
    std::vector<double> hx = grad_h_x(xp);
    double pz = -hamiltonian(xp);
    for (Index k = 0; k < d; ++k) {
      a[static_cast<std::size_t>(k)] = hp[static_cast<std::size_t>(k)];
      pz += xp[static_cast<std::size_t>(d + k)] * hp[static_cast<std::size_t>(k)];
      a[static_cast<std::size_t>(d + 1 + k)] = -hx[static_cast<std::size_t>(k)];
    }
    a[static_cast<std::size_t>(d)] = pz;
  };
  p.boundary_data.push_back([s0, d](std::span<const double> Y) {
    // Y = (x, z, p); g0 = z - S0(x)
    return Y[static_cast<std::size_t>(d)] - s0(Y.subspan(0, static_cast<std::size_t>(d)));
  });
  for (Index i = 0; i < d; ++i) {
    p.boundary_data.push_back([grad_s0, d, i](std::span<const double> Y) {
      std::vector<double> g = grad_s0(Y.subspan(0, static_cast<std::size_t>(d)));
      return Y[static_cast<std::size_t>(d + 1 + i)] - g[static_cast<std::size_t>(i)];
    });
  }
  return p;
}

namespace {

DomainBox box(double T, std::vector<double> lo, std::vector<double> hi) {
  DomainBox b;
  b.t_final = T;
  b.lo = std::move(lo);
  b.hi = std::move(hi);
  b.target_lo = b.lo;
  b.target_hi = b.hi;
  return b;
}

std::vector<Index> default_zero_grid(Index extended_dim) {
  Index per = extended_dim <= 3 ? 50 : 20;
  return std::vector<Index>(static_cast<std::size_t>(extended_dim), per);
}

// 1-D quasilinear balance law u_t + u u_x + V'(x) = 0.
CatalogCase forced_burgers_case(const std::string& id, ScalarFn u0, ScalarFn vprime,
                                double T, std::vector<double> lo, std::vector<double> hi,
                                std::vector<double> mean, std::vector<double> var,
                                double eps_tube) {
  CatalogCase c;
  c.id = id;
  ScalarFn q = vprime ? ScalarFn([vprime](std::span<const double> xz) {
    return vprime(xz.subspan(0, 1));
  })
                      : ScalarFn([](std::span<const double>) { return 0.0; });
  VectorFn flux = [](std::span<const double> z) { return std::vector<double>{z[0]}; };
  c.problem = make_balance_law(flux, q, u0, 1, box(T, std::move(lo), std::move(hi)));
  c.n_interior = 64000;
  c.n_boundary = 5000;
  c.mean = std::move(mean);
  c.variance = std::move(var);
  c.n_candidates = 51 * 51 * 51;
  c.eps_tube = eps_tube;
  c.m1 = 2000;
  c.r1 = {3.0, 3.0, 3.0};
  c.growth = {{1000, {5.0, 5.0, 5.0}}};
  c.zero_grid = default_zero_grid(3);
  c.oracle.initial_u = u0;
  c.oracle.potential_prime = vprime;
  c.oracle.x0_lo = {c.problem.domain.lo[0]};
  c.oracle.x0_hi = {c.problem.domain.hi[0]};
  return c;
}

// 1-D Hamilton-Jacobi with H = p^2/2 + V(x), gradient-only or full lift.
CatalogCase hj1d_case(const std::string& id, bool full, ScalarFn s0, ScalarFn ds0,
                      ScalarFn v, ScalarFn vprime, double T, double half_width,
                      std::vector<double> mean, std::vector<double> var,
                      double eps_tube, std::int64_t n_interior, std::int64_t n_boundary,
                      std::vector<double> r1, std::int64_t n_candidates) {
  CatalogCase c;
  c.id = id;
  VectorFn grad_h_x = [vprime](std::span<const double> xp) {
    return std::vector<double>{vprime ? vprime(xp.subspan(0, 1)) : 0.0};
  };
  VectorFn grad_h_p = [](std::span<const double> xp) {
    return std::vector<double>{xp[1]};
  };
  VectorFn grad_s0 = [ds0](std::span<const double> x) {
    return std::vector<double>{ds0(x)};
  };
  const Index dim_y = full ? 3 : 2;
  std::vector<double> lo(static_cast<std::size_t>(dim_y), -half_width);
  std::vector<double> hi(static_cast<std::size_t>(dim_y), half_width);
  if (full) {
    ScalarFn ham = [v](std::span<const double> xp) {
      double p = xp[1];
      return 0.5 * p * p + (v ? v(xp.subspan(0, 1)) : 0.0);
    };
    c.problem = make_hj_full(ham, grad_h_x, grad_h_p, s0, grad_s0, 1,
                             box(T, std::move(lo), std::move(hi)));
  } else {
    c.problem = make_hj_gradient(grad_h_x, grad_h_p, grad_s0, 1,
                                 box(T, std::move(lo), std::move(hi)));
  }
  c.n_interior = n_interior;
  c.n_boundary = n_boundary;
  c.mean = std::move(mean);
  c.variance = std::move(var);
  c.n_candidates = n_candidates;
  c.eps_tube = eps_tube;
  c.m1 = 2000;
  c.r1 = std::move(r1);
  c.zero_grid = default_zero_grid(1 + dim_y);
  c.oracle.s0 = s0;
  c.oracle.grad_s0 = grad_s0;
  c.oracle.potential = v;
  c.oracle.potential_prime = vprime;
  c.oracle.x0_lo = {c.problem.domain.lo[0]};
  c.oracle.x0_hi = {c.problem.domain.hi[0]};
  return c;
}

CatalogCase make_case(const std::string& id) {
  // --- Example 1: 1-D inviscid forced Burgers -------------------------------
  if (id == "ex1.case1") {
    ScalarFn u0 = [](std::span<const double> x) { return -std::sin(kPi * x[0]); };
    return forced_burgers_case(id, u0, nullptr, 1.0, {-1.0, -1.0}, {1.0, 1.0},
                               {0.0, 0.0}, {1.0, 1.0}, 0.4);
  }
  if (id == "ex1.case2") {
    ScalarFn u0 = [](std::span<const double> x) {
      if (x[0] < 0.0) return -1.0;
      if (x[0] > 0.0) return 1.0;
      return 0.0;  // averaged at the jump
    };
    CatalogCase c = forced_burgers_case(id, u0, nullptr, 1.0, {-1.0, -1.1}, {1.0, 1.1},
                                        {0.0, 0.0}, {1.5, 1.5}, 0.2);
    c.oracle.jumps.push_back({{0.0}, -1.0, 1.0});
    return c;
  }
  if (id == "ex1.case3") {
    ScalarFn u0 = [](std::span<const double> x) {
      if (x[0] < 0.0) return 1.0;
      if (x[0] > 0.0) return 0.0;
      return 0.5;
    };
    CatalogCase c = forced_burgers_case(id, u0, nullptr, 1.0, {-1.3, -0.3}, {1.3, 1.3},
                                        {0.0, 0.5}, {2.0, 1.5}, 0.6);
    c.oracle.jumps.push_back({{0.0}, 0.0, 1.0});
    return c;
  }
  if (id == "ex1.case4") {
    ScalarFn u0 = [](std::span<const double> x) { return -std::tanh(5.0 * x[0]); };
    ScalarFn vp = [](std::span<const double> x) { return x[0]; };
    return forced_burgers_case(id, u0, vp, kPi, {-2.0, -2.0}, {2.0, 2.0},
                               {0.0, 0.0}, {1.5, 1.5}, 0.9);
  }

  // --- Example 2: 2-D Burgers ------------------------------------------------
  if (id == "ex2.case1" || id == "ex2.case2") {
    const bool riemann = (id == "ex2.case2");
    ScalarFn u0;
    if (!riemann) {
      u0 = [](std::span<const double> x) {
        return 0.45 * std::cos(kPi * x[0]) * (std::sin(kPi * x[1]) - 1.0);
      };
    } else {
      u0 = [](std::span<const double> x) {
        auto val = [](bool xpos, bool ypos) {
          if (xpos && ypos) return -1.0;
          if (!xpos && ypos) return -0.2;
          if (!xpos && !ypos) return 0.5;
          return 0.0;
        };
        // averaged on the axes, where the four constant states meet
        if (x[0] == 0.0 && x[1] == 0.0) return (-1.0 - 0.2 + 0.5 + 0.0) / 4.0;
        if (x[0] == 0.0) return x[1] > 0.0 ? 0.5 * (-1.0 - 0.2) : 0.5 * (0.5 + 0.0);
        if (x[1] == 0.0) return x[0] > 0.0 ? 0.5 * (-1.0 + 0.0) : 0.5 * (-0.2 + 0.5);
        return val(x[0] > 0.0, x[1] > 0.0);
      };
    }
    VectorFn flux = [](std::span<const double> z) {
      return std::vector<double>{z[0], z[0]};
    };
    ScalarFn q = [](std::span<const double>) { return 0.0; };
    CatalogCase c;
    c.id = id;
    c.problem = make_balance_law(flux, q, u0, 2,
                                 box(riemann ? 0.5 : 1.0, {-1.0, -1.0, -1.0}, {1.0, 1.0, 1.0}));
    c.n_interior = 200000;
    c.n_boundary = 20000;
    // The table lists 2-vectors for a 3-dimensional Y; broadcast across Y.
    c.mean = {0.0, 0.0, 0.0};
    double s2 = riemann ? 2.0 : 1.0;
    c.variance = {s2, s2, s2};
    c.n_candidates = 31LL * 31 * 31 * 31;
    c.eps_tube = 0.5;
    c.m1 = 2000;
    c.r1 = riemann ? std::vector<double>{2.0, 2.0, 2.0, 2.0}
                   : std::vector<double>{3.0, 3.0, 3.0, 3.0};
    if (riemann)
      c.growth = {{1000, {2.0, 2.0, 2.0, 2.0}}, {1000, {2.0, 2.0, 2.0, 2.0}}};
    c.zero_grid = default_zero_grid(4);
    c.oracle.initial_u = u0;
    c.oracle.x0_lo = {-1.0, -1.0};
    c.oracle.x0_hi = {1.0, 1.0};
    return c;
  }

  // --- Examples 3 / 3b: 1-D Hamilton-Jacobi ----------------------------------
  auto hj_data = [](int variant) {
    struct Data {
      ScalarFn s0, ds0, v, vprime;
    } d;
    switch (variant) {
      case 1:
        d.s0 = [](std::span<const double> x) { return 0.5 * x[0] * x[0]; };
        d.ds0 = [](std::span<const double> x) { return x[0]; };
        break;
      case 2:
        d.s0 = [](std::span<const double> x) { return -0.5 * x[0] * x[0]; };
        d.ds0 = [](std::span<const double> x) { return -x[0]; };
        break;
      case 3:
        d.s0 = [](std::span<const double> x) { return -std::log(std::cosh(x[0])); };
        d.ds0 = [](std::span<const double> x) { return -std::tanh(x[0]); };
        break;
      case 4:
        d.s0 = [](std::span<const double> x) { return x[0]; };
        d.ds0 = [](std::span<const double>) { return 1.0; };
        d.v = [](std::span<const double> x) { return 0.5 * x[0] * x[0]; };
        d.vprime = [](std::span<const double> x) { return x[0]; };
        break;
    }
    return d;
  };

  for (int variant = 1; variant <= 4; ++variant) {
    std::string suffix = ".case" + std::to_string(variant);
    auto d = hj_data(variant);
    if (id == "ex3" + suffix) {
      double T = variant <= 2 ? 10.0 : (variant == 3 ? 2.0 : 2.0 * kPi);
      double hw = variant == 4 ? 3.0 : 2.0;
      double eps = variant <= 2 ? 1.0 : 0.6;
      return hj1d_case(id, false, d.s0, d.ds0, d.v, d.vprime, T, hw, {0.0, 0.0},
                       {2.0, 2.0}, eps, 20000, 5000, {2.0, 2.0, 2.0}, 51LL * 51 * 51);
    }
    if (id == "ex3b" + suffix) {
      double T = variant == 4 ? 2.0 * kPi : 2.0;
      double hw = variant == 4 ? 2.5 : 1.5;
      double eps = variant == 4 ? 1.0 : 0.5;
      double var = variant == 4 ? 3.0 : 1.5;
      std::int64_t ni = variant == 4 ? 200000 : 100000;
      std::int64_t nb = variant == 4 ? 20000 : 5000;
      double r = variant == 4 ? 0.3 : 3.0;
      return hj1d_case(id, true, d.s0, d.ds0, d.v, d.vprime, T, hw, {0.0, 0.0, 0.0},
                       {var, var, var}, eps, ni, nb, {r, r, r, r}, 21LL * 21 * 21 * 21);
    }
  }

  // --- Example 4: 2-D Hamilton-Jacobi, gradient system -----------------------
  if (id == "ex4") {
    ScalarFn s0 = [](std::span<const double> x) {
      return (0.45 / kPi) * (std::sin(kPi * x[0]) - 1.0) * (std::sin(kPi * x[1]) - 1.0);
    };
    VectorFn grad_s0 = [](std::span<const double> x) {
      return std::vector<double>{
          0.45 * std::cos(kPi * x[0]) * (std::sin(kPi * x[1]) - 1.0),
          0.45 * (std::sin(kPi * x[0]) - 1.0) * std::cos(kPi * x[1])};
    };
    VectorFn grad_h_x = [](std::span<const double>) {
      return std::vector<double>{0.0, 0.0};
    };
    VectorFn grad_h_p = [](std::span<const double> xp) {
      return std::vector<double>{xp[2], xp[3]};
    };
    CatalogCase c;
    c.id = id;
    c.problem = make_hj_gradient(grad_h_x, grad_h_p, grad_s0, 2,
                                 box(1.0, std::vector<double>(4, -1.2),
                                     std::vector<double>(4, 1.2)));
    c.n_interior = 500000;
    c.n_boundary = 50000;
    c.mean = {0.0, 0.0, 0.0, 0.0};
    c.variance = {1.0, 1.0, 1.0, 1.0};
    c.n_candidates = 20LL * 20 * 20 * 20 * 20;
    c.eps_tube = 0.5;
    c.m1 = 2000;
    c.r1 = {2.0, 2.0, 2.0, 2.0, 2.0};
    c.zero_grid = default_zero_grid(5);
    c.oracle.s0 = s0;
    c.oracle.grad_s0 = grad_s0;
    c.oracle.hess_s0 = [](std::span<const double> x, DenseMatrix& h) {
      h = DenseMatrix(2, 2);
      double s1 = std::sin(kPi * x[0]), c1 = std::cos(kPi * x[0]);
      double s2 = std::sin(kPi * x[1]), c2 = std::cos(kPi * x[1]);
      h(0, 0) = -0.45 * kPi * s1 * (s2 - 1.0);
      h(0, 1) = 0.45 * kPi * c1 * c2;
      h(1, 0) = h(0, 1);
      h(1, 1) = -0.45 * kPi * (s1 - 1.0) * s2;
    };
    c.oracle.x0_lo = {-1.2, -1.2};
    c.oracle.x0_hi = {1.2, 1.2};
    return c;
  }

  std::string known;
  for (const auto& k : catalog_ids()) known += (known.empty() ? "" : ", ") + k;
  throw std::invalid_argument("unknown case id '" + id + "'; valid ids: " + known);
}

}  // namespace

CatalogCase catalog(const std::string& case_id) { return make_case(case_id); }

std::vector<std::string> catalog_ids() {
  return {"ex1.case1", "ex1.case2", "ex1.case3", "ex1.case4",
          "ex2.case1", "ex2.case2",
          "ex3.case1", "ex3.case2", "ex3.case3", "ex3.case4",
          "ex3b.case1", "ex3b.case2", "ex3b.case3", "ex3b.case4",
          "ex4"};
}

}  // namespace mvls::problems
