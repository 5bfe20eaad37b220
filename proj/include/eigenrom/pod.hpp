#pragma once

#include <filesystem>
#include <span>

#include "eigenrom/continuation.hpp"
#include "eigenrom/linalg.hpp"

namespace eigenrom {

/// Orthonormal POD basis with the full retained singular spectrum.
struct PodBasis {
  DenseMatrix V;                   // n_rows x N, orthonormal columns
  std::vector<double> singular_values;  // all r retained values, descending
  std::size_t N = 0;
  std::size_t rank() const { return singular_values.size(); }
};

/// Singular values of S from the correlation matrix S^T S, descending, with
/// eigenvalues at or below (1e-14)^2 mu_1 discarded. Also returns the
/// matching correlation eigenvectors.
struct CorrelationSpectrum {
  std::vector<double> singular_values;
  DenseMatrix eigenvectors;  // n_s x r
};
CorrelationSpectrum correlation_spectrum(const SnapshotMatrix& s);

/// POD basis of dimension N via the method of snapshots.
///
/// Throws ParameterError for an empty snapshot set or N < 1, and
/// ParameterError naming the rank when N exceeds it.
PodBasis build_pod(const SnapshotMatrix& s, std::size_t N);

/// Smallest N whose energy fraction reaches 1 - eps^2.
std::size_t select_dim(std::span<const double> singular_values, double eps);

/// Sum over snapshots of ||u_i - V V^T u_i||^2. V may have zero columns.
double projection_error_sq(const SnapshotMatrix& s, const DenseMatrix& V);

/// One value per line, descending, 17 significant digits.
void write_singular_values(std::span<const double> singular_values, const std::filesystem::path& path);

}  // namespace eigenrom
