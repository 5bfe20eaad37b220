#pragma once

#include <functional>
#include <span>
#include <vector>

#include "eigenrom/continuation.hpp"
#include "eigenrom/fem.hpp"
#include "eigenrom/mesh.hpp"

namespace eigenrom {

/// Per-triangle residual indicators.
struct EtaField {
  std::vector<double> eta;  // eta_K >= 0
  double total = 0.0;       // (sum eta_K^2)^(1/2)
};

/// Residual estimator for the discrete eigenpair (u_h, lambda_h):
///
///   eta_K^2 = h_K^2 ||Delta u_h + lambda_h u_h||_K^2 + 1/2 sum_e h_e ||[grad u_h . n]||_e^2
///
/// summed over interior edges of K. `all_dofs` holds coefficients for every
/// dof, including boundary ones.
EtaField estimate_all_dofs(const Mesh& mesh, const DofMap& dofmap, std::span<const double> all_dofs,
                           double lambda);

/// Same, for a field over the free dofs (Dirichlet values zero).
EtaField estimate(const Mesh& mesh, const DiscreteField& u, double lambda);

/// Doerfler marking: greedy by descending eta_K (ties by index) until the
/// marked set carries theta^2 of the total squared estimate.
std::vector<int> mark(const EtaField& etas, double theta);

struct PodConfig {
  double eps = 1e-7;
  /// When set, eps is replaced by the M-norm distance between the
  /// normalized discrete and exact first eigenfunctions.
  std::function<double(double, double)> exact_eigenfunction;
};

struct AdaptiveRecord {
  std::size_t level = 0;
  std::size_t n_dof = 0;       // all dofs including boundary
  std::size_t n_triangles = 0;
  double lambda_fom = 0.0;
  double lambda_rom = 0.0;
  double eta_total = 0.0;
  std::size_t n_pod = 0;
  double fom_time = 0.0;
  double rom_time = 0.0;
  bool fom_converged = false;
  bool rom_converged = false;
  std::vector<double> singular_values;  // of the level's snapshot matrix
};

struct AdaptiveConfig {
  int fe_degree = 2;
  double theta = 0.5;
  std::size_t n_refinements = 6;  // levels after the initial mesh
  ContinuationConfig continuation;
  PodConfig pod;
};

/// Solve-Estimate-Mark-Refine loop. One record per level, n_refinements + 1
/// in total unless the estimate vanishes earlier. `on_level` (optional) is
/// called with every level's mesh before it is refined.
std::vector<AdaptiveRecord> adaptive_solve(
    const Mesh& initial, const AdaptiveConfig& config,
    const std::function<void(const AdaptiveRecord&, const Mesh&)>& on_level = {});

/// Eps from an exact eigenfunction: || u_h/|u_h|_M - s u/|u|_M ||_M with the
/// sign s aligning the two.
double exact_reference_eps(const CsrMatrix& mass, const DofMap& dofmap, std::span<const double> u_h,
                           const std::function<double(double, double)>& exact);

}  // namespace eigenrom
