#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace eigenrom {

using Vector = std::vector<double>;

/// Square sparse matrix in compressed-row form. Column indices are strictly
/// increasing within each row.
struct CsrMatrix {
  std::size_t n_rows = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<int> col_idx;
  std::vector<double> values;

  std::size_t nnz() const { return values.size(); }
  /// Entry (i, j), zero when not stored.
  double at(std::size_t i, std::size_t j) const;
  std::vector<double> diagonal() const;
};

struct Triplet {
  int row;
  int col;
  double value;
};

/// Sums duplicate entries in input order, so the result does not depend on
/// the sort implementation.
CsrMatrix csr_from_triplets(std::size_t n, std::vector<Triplet> triplets);

CsrMatrix csr_identity(std::size_t n);
CsrMatrix csr_diagonal(std::span<const double> diag);

/// a*X + b*Y. Patterns may differ.
CsrMatrix csr_axpby(double a, const CsrMatrix& x, double b, const CsrMatrix& y);

/// Checks the structural invariants and |a_ij - a_ji| <= 1e-14 max|a|.
bool is_symmetric(const CsrMatrix& k);

Vector spmv(const CsrMatrix& k, std::span<const double> x);
void spmv(const CsrMatrix& k, std::span<const double> x, std::span<double> y);
double dot(std::span<const double> x, std::span<const double> y);
double norm2(std::span<const double> x);
double csr_quadratic_form(const CsrMatrix& k, std::span<const double> x);
/// x^T K y
double csr_bilinear_form(const CsrMatrix& k, std::span<const double> x, std::span<const double> y);

struct CgResult {
  Vector x;
  std::size_t iterations = 0;
  double relative_residual = 0.0;
};

/// Jacobi-preconditioned conjugate gradients.
///
/// Stops once ||Kx - b|| <= rel_tol ||b|| (true residual, rechecked at the
/// end); caps at 20 n_rows iterations and throws NonConvergenceError. A zero
/// or negative diagonal entry throws NotSpdError.
CgResult pcg_solve(const CsrMatrix& k, std::span<const double> b, double rel_tol,
                   std::span<const double> x0 = {});

Vector spd_solve(const CsrMatrix& k, std::span<const double> b, double rel_tol = 1e-12);

/// Sparse LDL^T factorization with fill-reducing ordering, for repeated
/// solves with one SPD matrix. Throws NotSpdError if factorization fails.
class SparseCholesky {
 public:
  explicit SparseCholesky(const CsrMatrix& k);
  ~SparseCholesky();
  SparseCholesky(SparseCholesky&&) noexcept;
  SparseCholesky& operator=(SparseCholesky&&) noexcept;

  Vector solve(std::span<const double> b) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Row-major dense matrix.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static DenseMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  std::vector<double> column(std::size_t j) const;
  void set_column(std::size_t j, std::span<const double> v);
  DenseMatrix transposed() const;
  double frobenius_norm() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
/// A^T B without forming the transpose.
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);
Vector matvec(const DenseMatrix& a, std::span<const double> x);
/// A^T x
Vector matvec_t(const DenseMatrix& a, std::span<const double> x);

bool is_symmetric(const DenseMatrix& c);

struct SymEig {
  Vector values;         // descending
  DenseMatrix vectors;   // column i pairs with values[i]
};

/// Cyclic Jacobi eigensolver for dense symmetric matrices. Rotates until the
/// off-diagonal Frobenius norm drops to 1e-14 ||C||_F. Throws
/// NotSymmetricError for non-symmetric input.
SymEig sym_eig_desc(const DenseMatrix& c);

/// Dense Cholesky factor L (lower) with K = L L^T; throws NotSpdError.
class DenseCholesky {
 public:
  explicit DenseCholesky(const DenseMatrix& k);
  Vector solve(std::span<const double> b) const;
  const DenseMatrix& factor() const { return l_; }

 private:
  DenseMatrix l_;
};

}  // namespace eigenrom
