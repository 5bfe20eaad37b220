#include "eigenrom/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "eigenrom/errors.hpp"

namespace eigenrom {

double CsrMatrix::at(std::size_t i, std::size_t j) const {
  const auto first = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[i]);
  const auto last = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[i + 1]);
  const auto it = std::lower_bound(first, last, static_cast<int>(j));
  return (it != last && *it == static_cast<int>(j)) ? values[static_cast<std::size_t>(it - col_idx.begin())] : 0.0;
}

std::vector<double> CsrMatrix::diagonal() const {
  std::vector<double> d(n_rows, 0.0);
  for (std::size_t i = 0; i < n_rows; ++i) d[i] = at(i, i);
  return d;
}

CsrMatrix csr_from_triplets(std::size_t n, std::vector<Triplet> triplets) {
  for (const auto& t : triplets)
    if (t.row < 0 || t.col < 0 || static_cast<std::size_t>(t.row) >= n || static_cast<std::size_t>(t.col) >= n)
      throw DimensionError("triplet index out of range");
  std::stable_sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  CsrMatrix m;
  m.n_rows = n;
  m.row_ptr.assign(n + 1, 0);
  for (std::size_t i = 0; i < triplets.size();) {
    std::size_t j = i;
    double sum = 0.0;
    while (j < triplets.size() && triplets[j].row == triplets[i].row && triplets[j].col == triplets[i].col)
      sum += triplets[j++].value;
    m.col_idx.push_back(triplets[i].col);
    m.values.push_back(sum);
    m.row_ptr[static_cast<std::size_t>(triplets[i].row) + 1]++;
    i = j;
  }
  std::partial_sum(m.row_ptr.begin(), m.row_ptr.end(), m.row_ptr.begin());
  return m;
}

CsrMatrix csr_identity(std::size_t n) {
  std::vector<double> ones(n, 1.0);
  return csr_diagonal(ones);
}

CsrMatrix csr_diagonal(std::span<const double> diag) {
  CsrMatrix m;
  m.n_rows = diag.size();
  m.row_ptr.resize(diag.size() + 1);
  for (std::size_t i = 0; i <= diag.size(); ++i) m.row_ptr[i] = i;
  m.col_idx.resize(diag.size());
  std::iota(m.col_idx.begin(), m.col_idx.end(), 0);
  m.values.assign(diag.begin(), diag.end());
  return m;
}

CsrMatrix csr_axpby(double a, const CsrMatrix& x, double b, const CsrMatrix& y) {
  if (x.n_rows != y.n_rows) throw DimensionError("csr_axpby: row count mismatch");
  CsrMatrix m;
  m.n_rows = x.n_rows;
  m.row_ptr.assign(x.n_rows + 1, 0);
  m.col_idx.reserve(std::max(x.nnz(), y.nnz()));
  m.values.reserve(std::max(x.nnz(), y.nnz()));
  for (std::size_t i = 0; i < x.n_rows; ++i) {
    std::size_t p = x.row_ptr[i], q = y.row_ptr[i];
    const std::size_t pe = x.row_ptr[i + 1], qe = y.row_ptr[i + 1];
    while (p < pe || q < qe) {
      if (q >= qe || (p < pe && x.col_idx[p] < y.col_idx[q])) {
        m.col_idx.push_back(x.col_idx[p]);
        m.values.push_back(a * x.values[p++]);
      } else if (p >= pe || y.col_idx[q] < x.col_idx[p]) {
        m.col_idx.push_back(y.col_idx[q]);
        m.values.push_back(b * y.values[q++]);
      } else {
        m.col_idx.push_back(x.col_idx[p]);
        m.values.push_back(a * x.values[p++] + b * y.values[q++]);
      }
    }
    m.row_ptr[i + 1] = m.col_idx.size();
  }
  return m;
}

bool is_symmetric(const CsrMatrix& k) {
  if (k.row_ptr.size() != k.n_rows + 1) return false;
  double amax = 0.0;
  for (double v : k.values) amax = std::max(amax, std::abs(v));
  for (std::size_t i = 0; i < k.n_rows; ++i) {
    if (k.row_ptr[i + 1] < k.row_ptr[i]) return false;
    for (std::size_t p = k.row_ptr[i]; p < k.row_ptr[i + 1]; ++p) {
      if (p > k.row_ptr[i] && k.col_idx[p] <= k.col_idx[p - 1]) return false;
      const auto j = static_cast<std::size_t>(k.col_idx[p]);
      if (j >= k.n_rows) return false;
      if (std::abs(k.values[p] - k.at(j, i)) > 1e-14 * amax) return false;
    }
  }
  return true;
}

void spmv(const CsrMatrix& k, std::span<const double> x, std::span<double> y) {
  if (x.size() != k.n_rows || y.size() != k.n_rows) throw DimensionError("spmv: dimension mismatch");
  for (std::size_t i = 0; i < k.n_rows; ++i) {
    double s = 0.0;
    for (std::size_t p = k.row_ptr[i]; p < k.row_ptr[i + 1]; ++p) s += k.values[p] * x[static_cast<std::size_t>(k.col_idx[p])];
    y[i] = s;
  }
}

Vector spmv(const CsrMatrix& k, std::span<const double> x) {
  Vector y(k.n_rows, 0.0);
  spmv(k, x, y);
  return y;
}

double dot(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionError("dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

double csr_quadratic_form(const CsrMatrix& k, std::span<const double> x) { return dot(x, spmv(k, x)); }

double csr_bilinear_form(const CsrMatrix& k, std::span<const double> x, std::span<const double> y) {
  return dot(x, spmv(k, y));
}

CgResult pcg_solve(const CsrMatrix& k, std::span<const double> b, double rel_tol, std::span<const double> x0) {
  const std::size_t n = k.n_rows;
  if (b.size() != n) throw DimensionError("pcg_solve: right-hand side has wrong size");
  if (!x0.empty() && x0.size() != n) throw DimensionError("pcg_solve: initial guess has wrong size");
  if (!(rel_tol > 0.0 && rel_tol < 1.0)) throw ParameterError("pcg_solve: rel_tol must lie in (0,1)");

  Vector inv_diag = k.diagonal();
  for (std::size_t i = 0; i < n; ++i) {
    if (!(inv_diag[i] > 0.0)) {
      std::ostringstream os;
      os << "matrix is not SPD: diagonal entry " << i << " is " << inv_diag[i];
      throw NotSpdError(os.str());
    }
    inv_diag[i] = 1.0 / inv_diag[i];
  }

  CgResult res;
  res.x = x0.empty() ? Vector(n, 0.0) : Vector(x0.begin(), x0.end());
  const double bnorm = norm2(b);
  if (bnorm == 0.0) {
    std::fill(res.x.begin(), res.x.end(), 0.0);
    return res;
  }
  Vector r(n), z(n), p(n), q(n);
  spmv(k, res.x, r);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
  const double target = rel_tol * bnorm;
  double rnorm = norm2(r);
  const std::size_t cap = 20 * n;

  // Restart on the true residual if the recursive one undershoots it.
  for (int attempt = 0; attempt < 4 && rnorm > target; ++attempt) {
    for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    p = z;
    double rz = dot(r, z);
    while (rnorm > target) {
      if (res.iterations >= cap) {
        throw NonConvergenceError("conjugate gradients hit the iteration cap", rnorm / bnorm);
      }
      spmv(k, p, q);
      const double pq = dot(p, q);
      if (!(pq > 0.0)) throw NotSpdError("matrix is not SPD: non-positive curvature in conjugate gradients");
      const double alpha = rz / pq;
      for (std::size_t i = 0; i < n; ++i) {
        res.x[i] += alpha * p[i];
        r[i] -= alpha * q[i];
      }
      rnorm = norm2(r);
      ++res.iterations;
      if (rnorm <= target) break;
      for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
      const double rz_new = dot(r, z);
      const double beta = rz_new / rz;
      rz = rz_new;
      for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    spmv(k, res.x, r);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
    rnorm = norm2(r);
  }
  res.relative_residual = rnorm / bnorm;
  if (rnorm > target)
    throw NonConvergenceError("conjugate gradients stagnated above the requested tolerance", res.relative_residual);
  return res;
}

Vector spd_solve(const CsrMatrix& k, std::span<const double> b, double rel_tol) {
  return pcg_solve(k, b, rel_tol).x;
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

std::vector<double> DenseMatrix::column(std::size_t j) const {
  std::vector<double> c(rows_);
  for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
  return c;
}

void DenseMatrix::set_column(std::size_t j, std::span<const double> v) {
  if (v.size() != rows_) throw DimensionError("set_column: length mismatch");
  for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = v[i];
}

DenseMatrix DenseMatrix::transposed() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

double DenseMatrix::frobenius_norm() const { return norm2(data_); }

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw DimensionError("matmul: inner dimensions differ");
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) throw DimensionError("matmul_tn: row counts differ");
  DenseMatrix c(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k)
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a(k, i);
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aki * b(k, j);
    }
  return c;
}

Vector matvec(const DenseMatrix& a, std::span<const double> x) {
  if (x.size() != a.cols()) throw DimensionError("matvec: dimension mismatch");
  Vector y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

Vector matvec_t(const DenseMatrix& a, std::span<const double> x) {
  if (x.size() != a.rows()) throw DimensionError("matvec_t: dimension mismatch");
  Vector y(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double xi = x[i];
    for (std::size_t j = 0; j < a.cols(); ++j) y[j] += a(i, j) * xi;
  }
  return y;
}

bool is_symmetric(const DenseMatrix& c) {
  if (c.rows() != c.cols()) return false;
  double amax = 0.0;
  for (double v : c.data()) amax = std::max(amax, std::abs(v));
  for (std::size_t i = 0; i < c.rows(); ++i)
    for (std::size_t j = i + 1; j < c.cols(); ++j)
      if (std::abs(c(i, j) - c(j, i)) > 1e-14 * amax) return false;
  return true;
}

SymEig sym_eig_desc(const DenseMatrix& c) {
  if (c.rows() != c.cols()) throw DimensionError("sym_eig_desc: input matrix is not square");
  if (!is_symmetric(c)) throw NotSymmetricError("sym_eig_desc: input matrix is not symmetric");
  const std::size_t n = c.rows();
  DenseMatrix a = c;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) a(i, j) = a(j, i) = 0.5 * (c(i, j) + c(j, i));
  DenseMatrix v = DenseMatrix::identity(n);

  const double target = 1e-14 * c.frobenius_norm();
  auto off_norm = [&a, n] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) s += 2.0 * a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  constexpr int max_sweeps = 100;
  int sweep = 0;
  for (double off = off_norm(); off > target; off = off_norm()) {
    if (++sweep > max_sweeps) throw NonConvergenceError("Jacobi eigensolver did not converge", off);
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double cs = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * cs;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = cs * akp - sn * akq;
          a(k, q) = sn * akp + cs * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = cs * apk - sn * aqk;
          a(q, k) = sn * apk + cs * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = cs * vkp - sn * vkq;
          v(k, q) = sn * vkp + cs * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&a](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });
  SymEig out;
  out.values.resize(n);
  out.vectors = DenseMatrix(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
  }
  return out;
}

DenseCholesky::DenseCholesky(const DenseMatrix& k) : l_(k.rows(), k.cols()) {
  if (k.rows() != k.cols()) throw DimensionError("Cholesky needs a square matrix");
  const std::size_t n = k.rows();
  for (std::size_t j = 0; j < n; ++j) {
    double d = k(j, j);
    for (std::size_t p = 0; p < j; ++p) d -= l_(j, p) * l_(j, p);
    if (!(d > 0.0)) throw NotSpdError("Cholesky factorization failed: matrix is not SPD");
    const double ljj = std::sqrt(d);
    l_(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = k(i, j);
      for (std::size_t p = 0; p < j; ++p) s -= l_(i, p) * l_(j, p);
      l_(i, j) = s / ljj;
    }
  }
}

Vector DenseCholesky::solve(std::span<const double> b) const {
  const std::size_t n = l_.rows();
  if (b.size() != n) throw DimensionError("Cholesky solve: right-hand side has wrong size");
  Vector y(b.begin(), b.end());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < i; ++p) y[i] -= l_(i, p) * y[p];
    y[i] /= l_(i, i);
  }
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t p = i + 1; p < n; ++p) y[i] -= l_(p, i) * y[p];
    y[i] /= l_(i, i);
  }
  return y;
}

}  // namespace eigenrom
