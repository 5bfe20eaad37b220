#include "eigenrom/pod.hpp"

#include <cmath>
#include <fstream>

#include "eigenrom/errors.hpp"

namespace eigenrom {

CorrelationSpectrum correlation_spectrum(const SnapshotMatrix& s) {
  const std::size_t ns = s.n_cols();
  if (ns == 0 || s.n_rows == 0) throw ParameterError("POD: empty snapshot matrix");
  DenseMatrix c(ns, ns);
  for (std::size_t i = 0; i < ns; ++i) {
    if (s.columns[i].size() != s.n_rows) throw DimensionError("POD: snapshot column has wrong length");
    for (std::size_t j = 0; j <= i; ++j) c(i, j) = c(j, i) = dot(s.columns[i], s.columns[j]);
  }
  const SymEig eig = sym_eig_desc(c);
  CorrelationSpectrum out;
  const double mu1 = eig.values.front();
  std::size_t r = 0;
  while (r < ns && mu1 > 0.0 && eig.values[r] > 1e-28 * mu1) ++r;
  out.singular_values.resize(r);
  out.eigenvectors = DenseMatrix(ns, r);
  for (std::size_t k = 0; k < r; ++k) {
    out.singular_values[k] = std::sqrt(eig.values[k]);
    for (std::size_t i = 0; i < ns; ++i) out.eigenvectors(i, k) = eig.vectors(i, k);
  }
  return out;
}

PodBasis build_pod(const SnapshotMatrix& s, std::size_t N) {
  if (N < 1) throw ParameterError("POD: basis dimension must be at least 1");
  if (s.n_cols() < N) throw ParameterError("POD: fewer snapshots than the requested basis dimension");
  CorrelationSpectrum spec = correlation_spectrum(s);
  const std::size_t r = spec.singular_values.size();
  if (N > r)
    throw RankError("POD: requested dimension " + std::to_string(N) + " exceeds the numerical rank " +
                        std::to_string(r),
                    r);

  PodBasis pod;
  pod.N = N;
  pod.V = DenseMatrix(s.n_rows, N);
  std::vector<Vector> cols(N, Vector(s.n_rows, 0.0));
  for (std::size_t j = 0; j < N; ++j) {
    Vector& z = cols[j];
    for (std::size_t i = 0; i < s.n_cols(); ++i) {
      const double w = spec.eigenvectors(i, j) / spec.singular_values[j];
      const Vector& u = s.columns[i];
      for (std::size_t k = 0; k < z.size(); ++k) z[k] += w * u[k];
    }
  }
  // Modified Gram-Schmidt against roundoff in clustered or tiny modes. A
  // second pass runs when the first removes more than half the norm.
  for (std::size_t j = 0; j < N; ++j) {
    Vector& z = cols[j];
    for (int pass = 0; pass < 2; ++pass) {
      const double before = norm2(z);
      for (std::size_t i = 0; i < j; ++i) {
        const double proj = dot(cols[i], z);
        for (std::size_t k = 0; k < z.size(); ++k) z[k] -= proj * cols[i][k];
      }
      if (norm2(z) > 0.5 * before) break;
    }
    const double nz = norm2(z);
    if (!(nz > 0.0)) throw InternalError("POD: basis vector vanished during orthonormalization");
    std::size_t imax = 0;
    for (std::size_t k = 1; k < z.size(); ++k)
      if (std::abs(z[k]) > std::abs(z[imax])) imax = k;
    const double scale = (z[imax] < 0.0 ? -1.0 : 1.0) / nz;
    for (auto& v : z) v *= scale;
    pod.V.set_column(j, z);
  }
  pod.singular_values = std::move(spec.singular_values);
  return pod;
}

std::size_t select_dim(std::span<const double> singular_values, double eps) {
  if (singular_values.empty()) throw ParameterError("select_dim: empty singular value list");
  if (!(eps > 0.0 && eps < 1.0)) throw ParameterError("select_dim: eps must lie in (0,1)");
  double total = 0.0;
  for (double s : singular_values) total += s * s;
  const double threshold = 1.0 - eps * eps;
  double partial = 0.0;
  for (std::size_t n = 0; n < singular_values.size(); ++n) {
    partial += singular_values[n] * singular_values[n];
    if (partial / total >= threshold) return n + 1;
  }
  return singular_values.size();
}

double projection_error_sq(const SnapshotMatrix& s, const DenseMatrix& V) {
  const std::size_t n_basis = V.cols();
  if (n_basis > 0 && V.rows() != s.n_rows) throw DimensionError("projection_error_sq: basis has wrong row count");
  double total = 0.0;
  for (const auto& u : s.columns) {
    if (u.size() != s.n_rows) throw DimensionError("projection_error_sq: snapshot column has wrong length");
    Vector r = u;
    if (n_basis > 0) {
      const Vector coeff = matvec_t(V, u);
      const Vector proj = matvec(V, coeff);
      for (std::size_t k = 0; k < r.size(); ++k) r[k] -= proj[k];
    }
    total += dot(r, r);
  }
  return total;
}

void write_singular_values(std::span<const double> singular_values, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open singular value file for writing: " + path.string());
  os.precision(17);
  for (double s : singular_values) os << s << '\n';
  if (!os) throw IoError("failed writing singular value file: " + path.string());
}

}  // namespace eigenrom
