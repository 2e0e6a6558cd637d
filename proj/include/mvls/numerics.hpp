#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mvls/parallel.hpp"

namespace mvls::numerics {

using Index = std::int64_t;

// Row-major dense matrix of doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(Index rows, Index cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows * cols), fill) {}

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }

  double& operator()(Index i, Index j) { return data_[static_cast<std::size_t>(i * cols_ + j)]; }
  double operator()(Index i, Index j) const { return data_[static_cast<std::size_t>(i * cols_ + j)]; }

  double* row(Index i) { return data_.data() + i * cols_; }
  const double* row(Index i) const { return data_.data() + i * cols_; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool all_finite() const;

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<double> data_;
};

struct LsqReport {
  double residual_norm = 0.0;       // Euclidean norm over all right-hand sides
  Index rank_estimate = 0;
  double condition_estimate = 0.0;  // |R_00| / |R_rr| from the pivoted diagonal
  bool rank_deficient = false;
  std::vector<double> column_residuals;  // per right-hand side
};

struct LsqSolution {
  DenseMatrix x;  // cols(A) x cols(B)
  LsqReport report;
};

// Minimum-norm least-squares solve of A x = b for every column b of B via
// Householder QR with column pivoting. Diagonal entries of R below
// rank_tol * max|R_ii| mark numerical rank deficiency; in that case the
// factorization is completed to an orthogonal [T 0] form and the
// minimum-norm solution is returned, flagged in the report.
//
// All right-hand sides share one factorization. Serial and Parallel
// execution produce bit-identical results.
LsqSolution solve_lsq(const DenseMatrix& A, const DenseMatrix& B,
                      par::Exec exec = par::Exec::Parallel,
                      double rank_tol = 1e-12);

// Optimality defect max_i |A^T (b - A x)|_i. Zero (up to roundoff) exactly
// when x minimizes ||A x - b||.
double residual_orthogonality(const DenseMatrix& A, std::span<const double> x,
                              std::span<const double> b,
                              par::Exec exec = par::Exec::Parallel);

double inf_norm(const DenseMatrix& A);
double inf_norm(std::span<const double> v);

}  // namespace mvls::numerics
