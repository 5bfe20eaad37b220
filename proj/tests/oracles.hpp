#pragma once

// Reference computations used only by the tests. None of them share code
// with the library: the SVD works on S directly (no correlation matrix), and
// dense eigenvalues come from power iteration rather than Jacobi rotations.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

using Col = std::vector<double>;
using ColMatrix = std::vector<Col>;  // column-major: m[j] is column j

inline double kahan_dot(const std::vector<double>& x, const std::vector<double>& y) {
  double sum = 0.0, c = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double t = x[i] * y[i] - c;
    const double s = sum + t;
    c = (s - sum) - t;
    sum = s;
  }
  return sum;
}

inline double plain_dot(const Col& x, const Col& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

struct Svd {
  std::vector<double> sigma;  // descending
  ColMatrix u;                // left singular vectors, unit length
};

/// One-sided Jacobi (Hestenes) SVD: orthogonalizes the columns of S by plane
/// rotations until every pair is orthogonal to 1e-15 relative.
inline Svd one_sided_jacobi_svd(ColMatrix a) {
  const std::size_t n = a.size();
  for (int sweep = 0; sweep < 80; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        const double alpha = plain_dot(a[p], a[p]);
        const double beta = plain_dot(a[q], a[q]);
        const double gamma = plain_dot(a[p], a[q]);
        if (std::abs(gamma) <= 1e-15 * std::sqrt(alpha * beta) || gamma == 0.0) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < a[p].size(); ++i) {
          const double x = a[p][i], y = a[q][i];
          a[p][i] = c * x - s * y;
          a[q][i] = s * x + c * y;
        }
      }
    if (!rotated) break;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> norms(n);
  for (std::size_t j = 0; j < n; ++j) norms[j] = std::sqrt(plain_dot(a[j], a[j]));
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return norms[i] > norms[j]; });
  Svd out;
  for (std::size_t j : order) {
    out.sigma.push_back(norms[j]);
    Col u = a[j];
    if (norms[j] > 0.0)
      for (auto& v : u) v /= norms[j];
    out.u.push_back(u);
  }
  return out;
}

/// Eigenvalues of a symmetric positive semidefinite matrix (row-major n x n)
/// by power iteration with Hotelling deflation, largest first.
inline std::vector<double> power_deflation_eigs(std::vector<double> c, std::size_t n, std::size_t k,
                                                std::uint64_t seed = 7) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<double> vals;
  for (std::size_t e = 0; e < k; ++e) {
    Col v(n);
    for (auto& x : v) x = g(rng);
    double lambda = 0.0;
    for (int it = 0; it < 20000; ++it) {
      Col w(n, 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) w[i] += c[i * n + j] * v[j];
      const double nw = std::sqrt(plain_dot(w, w));
      if (nw == 0.0) {
        lambda = 0.0;
        break;
      }
      for (auto& x : w) x /= nw;
      const double prev = lambda;
      lambda = nw;
      v = w;
      if (it > 10 && std::abs(lambda - prev) <= 1e-16 * lambda) break;
    }
    // Rayleigh quotient of the converged vector is more accurate than the norm ratio.
    Col cv(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) cv[i] += c[i * n + j] * v[j];
    lambda = plain_dot(v, cv);
    vals.push_back(lambda);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) c[i * n + j] -= lambda * v[i] * v[j];
  }
  return vals;
}

inline ColMatrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  ColMatrix m(cols, Col(rows));
  for (auto& col : m)
    for (auto& v : col) v = g(rng);
  return m;
}

/// Random matrix with prescribed singular values: U diag(sigma) W^T with
/// orthonormal U and W from Gram-Schmidt on Gaussian matrices.
inline ColMatrix matrix_with_spectrum(std::size_t rows, const std::vector<double>& sigma, std::uint64_t seed) {
  const std::size_t k = sigma.size();
  auto orthonormal = [](ColMatrix q) {
    for (std::size_t j = 0; j < q.size(); ++j) {
      for (int pass = 0; pass < 2; ++pass)
        for (std::size_t i = 0; i < j; ++i) {
          const double p = plain_dot(q[i], q[j]);
          for (std::size_t r = 0; r < q[j].size(); ++r) q[j][r] -= p * q[i][r];
        }
      const double nq = std::sqrt(plain_dot(q[j], q[j]));
      for (auto& v : q[j]) v /= nq;
    }
    return q;
  };
  const ColMatrix u = orthonormal(random_matrix(rows, k, seed));
  const ColMatrix w = orthonormal(random_matrix(k, k, seed + 1));
  ColMatrix s(k, Col(rows, 0.0));
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t l = 0; l < k; ++l)
      for (std::size_t r = 0; r < rows; ++r) s[j][r] += u[l][r] * sigma[l] * w[l][j];
  return s;
}

}  // namespace oracle
