#include "mvls/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mvls::numerics {

bool DenseMatrix::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

double inf_norm(const DenseMatrix& A) {
  double best = 0.0;
  for (Index i = 0; i < A.rows(); ++i) {
    double s = 0.0;
    const double* r = A.row(i);
    for (Index j = 0; j < A.cols(); ++j) s += std::fabs(r[j]);
    best = std::max(best, s);
  }
  return best;
}

double inf_norm(std::span<const double> v) {
  double best = 0.0;
  for (double x : v) best = std::max(best, std::fabs(x));
  return best;
}

namespace {

double col_norm(const double* col, Index from, Index n) {
  double s = 0.0;
  for (Index i = from; i < n; ++i) s += col[i] * col[i];
  return std::sqrt(s);
}

// Right-acting Householder reflector used by the rank-deficient path.
// The implied unit pivot sits at column `piv`; `tail` holds the remaining
// nonzeros at columns [tail_begin, tail_begin + tail_len).
struct RightReflector {
  Index piv = 0;
  Index tail_begin = 0;
  std::vector<double> tail;
  double tau = 0.0;
};

}  // namespace

LsqSolution solve_lsq(const DenseMatrix& A, const DenseMatrix& B,
                      par::Exec exec, double rank_tol) {
  const Index n = A.rows();
  const Index m = A.cols();
  const Index k_rhs = B.cols();
  if (n == 0 || m == 0) throw std::invalid_argument("solve_lsq: empty matrix");
  if (B.rows() != n) throw std::invalid_argument("solve_lsq: rhs row mismatch");
  if (!A.all_finite() || !B.all_finite())
    throw std::invalid_argument("solve_lsq: non-finite entries in input");

  // Column-major working copies; reflectors accumulate in place.
  std::vector<double> F(static_cast<std::size_t>(n * m));
  std::vector<double> C(static_cast<std::size_t>(n * k_rhs));
  par::for_each_index(exec, m, [&](Index j) {
    double* col = F.data() + j * n;
    for (Index i = 0; i < n; ++i) col[i] = A(i, j);
  });
  for (Index j = 0; j < k_rhs; ++j) {
    double* col = C.data() + j * n;
    for (Index i = 0; i < n; ++i) col[i] = B(i, j);
  }

  std::vector<Index> perm(m);
  std::vector<double> cnorm(m), cnorm_ref(m);
  for (Index j = 0; j < m; ++j) perm[j] = j;
  par::for_each_index(exec, m, [&](Index j) {
    cnorm[j] = col_norm(F.data() + j * n, 0, n);
    cnorm_ref[j] = cnorm[j];
  });

  const Index kmax = std::min(n, m);
  std::vector<double> tau(kmax, 0.0);

  for (Index k = 0; k < kmax; ++k) {
    // Pivot: bring the column of largest remaining norm to position k.
    Index p = k;
    for (Index j = k + 1; j < m; ++j)
      if (cnorm[j] > cnorm[p]) p = j;
    if (p != k) {
      for (Index i = 0; i < n; ++i) std::swap(F[k * n + i], F[p * n + i]);
      std::swap(perm[k], perm[p]);
      std::swap(cnorm[k], cnorm[p]);
      std::swap(cnorm_ref[k], cnorm_ref[p]);
    }

    double* colk = F.data() + k * n;
    double sigma = col_norm(colk, k, n);
    if (sigma == 0.0) {
      tau[k] = 0.0;
      continue;  // entire trailing column is zero; R_kk = 0
    }
    double alpha = colk[k];
    double beta = (alpha >= 0.0) ? -sigma : sigma;
    tau[k] = (beta - alpha) / beta;
    double denom = alpha - beta;
    for (Index i = k + 1; i < n; ++i) colk[i] /= denom;
    colk[k] = beta;

    // Apply H = I - tau v v^T to the trailing columns of F and all of C.
    const double tk = tau[k];
    const Index total = (m - k - 1) + k_rhs;
    par::for_each_index(exec, total, [&](Index t) {
      double* col = (t < m - k - 1) ? F.data() + (k + 1 + t) * n
                                    : C.data() + (t - (m - k - 1)) * n;
      double w = col[k];
      for (Index i = k + 1; i < n; ++i) w += colk[i] * col[i];
      w *= tk;
      col[k] -= w;
      for (Index i = k + 1; i < n; ++i) col[i] -= w * colk[i];
    });

    // Downdate the remaining column norms (LINPACK style, with exact
    // recomputation when cancellation makes the update unreliable).
    for (Index j = k + 1; j < m; ++j) {
      if (cnorm[j] == 0.0) continue;
      double t = std::fabs(F[j * n + k]) / cnorm[j];
      double f = std::max(0.0, 1.0 - t * t);
      cnorm[j] *= std::sqrt(f);
      double rel = cnorm[j] / cnorm_ref[j];
      if (rel * rel <= 1e-14) {
        cnorm[j] = col_norm(F.data() + j * n, k + 1, n);
        cnorm_ref[j] = cnorm[j];
      }
    }
  }

  // Numerical rank from the pivoted diagonal.
  double max_diag = 0.0;
  for (Index i = 0; i < kmax; ++i) max_diag = std::max(max_diag, std::fabs(F[i * n + i]));
  Index rank = 0;
  if (max_diag > 0.0) {
    while (rank < kmax && std::fabs(F[rank * n + rank]) > rank_tol * max_diag) ++rank;
  }

  LsqSolution out;
  out.report.rank_estimate = rank;
  out.report.rank_deficient = (rank < m);
  if (rank > 0)
    out.report.condition_estimate =
        std::fabs(F[0]) / std::fabs(F[(rank - 1) * n + (rank - 1)]);

  // Rank-deficient path: reduce [R11 R12] (rank x m) to [T 0] with
  // reflectors acting from the right, then back out the minimum-norm
  // solution through them.
  std::vector<RightReflector> rz;
  if (rank < m && rank > 0) {
    rz.resize(rank);
    for (Index i = rank - 1; i >= 0; --i) {
      const Index tail_len = m - rank;
      double alpha = F[i * n + i];
      double s2 = 0.0;
      for (Index j = 0; j < tail_len; ++j) {
        double v = F[(rank + j) * n + i];
        s2 += v * v;
      }
      RightReflector& rf = rz[i];
      rf.piv = i;
      rf.tail_begin = rank;
      rf.tail.assign(tail_len, 0.0);
      if (s2 == 0.0) {
        rf.tau = 0.0;
        continue;
      }
      double sigma = std::sqrt(alpha * alpha + s2);
      double beta = (alpha >= 0.0) ? -sigma : sigma;
      rf.tau = (beta - alpha) / beta;
      double denom = alpha - beta;
      for (Index j = 0; j < tail_len; ++j) rf.tail[j] = F[(rank + j) * n + i] / denom;
      F[i * n + i] = beta;
      // Apply to rows above row i (rows strictly between are unaffected:
      // their pivot-column entry and tail are both zero).
      for (Index q = 0; q < i; ++q) {
        double w = F[i * n + q];
        for (Index j = 0; j < tail_len; ++j) w += rf.tail[j] * F[(rank + j) * n + q];
        w *= rf.tau;
        F[i * n + q] -= w;
        for (Index j = 0; j < tail_len; ++j) F[(rank + j) * n + q] -= w * rf.tail[j];
      }
      for (Index j = 0; j < tail_len; ++j) F[(rank + j) * n + i] = 0.0;
    }
  }

  out.x = DenseMatrix(m, k_rhs, 0.0);
  out.report.column_residuals.assign(static_cast<std::size_t>(k_rhs), 0.0);
  double total_res2 = 0.0;
  std::vector<double> w(m);
  for (Index c = 0; c < k_rhs; ++c) {
    const double* rhs = C.data() + c * n;
    std::fill(w.begin(), w.end(), 0.0);
    // Back substitution on the triangular factor.
    for (Index i = rank - 1; i >= 0; --i) {
      double s = rhs[i];
      for (Index j = i + 1; j < rank; ++j) s -= F[j * n + i] * w[j];
      w[i] = s / F[i * n + i];
    }
    if (!rz.empty()) {
      // x = H_{r-1} ... H_0 w, applied pivot-first.
      for (Index i = 0; i < rank; ++i) {
        const RightReflector& rf = rz[i];
        if (rf.tau == 0.0) continue;
        double s = w[rf.piv];
        for (std::size_t j = 0; j < rf.tail.size(); ++j)
          s += rf.tail[j] * w[rf.tail_begin + static_cast<Index>(j)];
        s *= rf.tau;
        w[rf.piv] -= s;
        for (std::size_t j = 0; j < rf.tail.size(); ++j)
          w[rf.tail_begin + static_cast<Index>(j)] -= s * rf.tail[j];
      }
    }
    for (Index j = 0; j < m; ++j) out.x(perm[j], c) = w[j];
    double r2 = 0.0;
    for (Index i = rank; i < n; ++i) r2 += rhs[i] * rhs[i];
    out.report.column_residuals[static_cast<std::size_t>(c)] = std::sqrt(r2);
    total_res2 += r2;
  }
  out.report.residual_norm = std::sqrt(total_res2);
  return out;
}

double residual_orthogonality(const DenseMatrix& A, std::span<const double> x,
                              std::span<const double> b, par::Exec exec) {
  const Index n = A.rows();
  const Index m = A.cols();
  if (static_cast<Index>(x.size()) != m || static_cast<Index>(b.size()) != n)
    throw std::invalid_argument("residual_orthogonality: shape mismatch");

  std::vector<double> r(static_cast<std::size_t>(n));
  par::for_each_index(exec, n, [&](Index i) {
    double s = b[static_cast<std::size_t>(i)];
    const double* row = A.row(i);
    for (Index j = 0; j < m; ++j) s -= row[j] * x[static_cast<std::size_t>(j)];
    r[static_cast<std::size_t>(i)] = s;
  });

  std::vector<double> g(static_cast<std::size_t>(m));
  par::for_each_index(exec, m, [&](Index j) {
    double s = 0.0;
    for (Index i = 0; i < n; ++i) s += A(i, j) * r[static_cast<std::size_t>(i)];
    g[static_cast<std::size_t>(j)] = s;
  });
  return inf_norm(g);
}

}  // namespace mvls::numerics
