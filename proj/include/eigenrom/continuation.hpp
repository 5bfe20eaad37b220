#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eigenrom/linalg.hpp"

namespace eigenrom {

enum class InitialGuess { ones, random };

/// Linear solver for the implicit Euler system (A + M/dt) U = rhs.
enum class LinearSolverKind { cg, cholesky };

struct ContinuationConfig {
  double dt = 0.1;
  double stop_tol = 1e-8;
  std::size_t max_steps = 100000;
  std::size_t snapshot_stride = 4;
  InitialGuess initial_guess = InitialGuess::ones;
  std::uint64_t seed = 0;
  double solver_tol = 1e-12;
  LinearSolverKind solver = LinearSolverKind::cg;

  /// Throws ParameterError on invalid values.
  void validate() const;
};

/// Time states U^k sampled at k = stride, 2 stride, ...
struct SnapshotMatrix {
  std::size_t n_rows = 0;
  std::size_t stride = 1;
  std::vector<Vector> columns;

  std::size_t n_cols() const { return columns.size(); }
  DenseMatrix to_dense() const;
};

struct SolveTrace {
  std::vector<double> lambda_history;  // lambda^0, lambda^1, ..., lambda at the final state
  Vector final_vector;
  double lambda = 0.0;
  std::size_t n_steps = 0;
  double wall_time = 0.0;  // seconds
  bool converged = false;
  double last_change = 0.0;  // ||U^{k+1} - U^k|| / ||U^{k+1}|| at the last step
  /// Set when the start was (numerically) M-orthogonal to the first mode: the
  /// converged state changes sign, or is M-orthogonal to the start itself.
  bool orthogonal_start = false;
};

/// Initial state over n free dofs.
Vector initial_state(const ContinuationConfig& config, std::size_t n);

/// Factored or iterative solver for the fixed system matrix A + M/dt.
class ImplicitEulerOperator {
 public:
  ImplicitEulerOperator(const CsrMatrix& a, const CsrMatrix& m, double dt, LinearSolverKind kind,
                        double solver_tol);

  /// One implicit Euler step: (A + M/dt)^{-1} (lambda + 1/dt) M u.
  Vector step(std::span<const double> u, double lambda) const;
  const CsrMatrix& system() const { return system_; }

 private:
  const CsrMatrix* mass_;
  double dt_;
  double tol_;
  CsrMatrix system_;
  std::optional<SparseCholesky> factor_;
};

/// Single step with a freshly built system matrix (CG).
Vector fom_step(const CsrMatrix& a, const CsrMatrix& m, std::span<const double> u, double lambda, double dt,
                double solver_tol = 1e-12);

struct FomResult {
  SolveTrace trace;
  SnapshotMatrix snapshots;
};

/// Fictitious-time continuation to the first eigenpair of (A, M).
FomResult run_fom(const CsrMatrix& a, const CsrMatrix& m, const ContinuationConfig& config);
FomResult run_fom(const CsrMatrix& a, const CsrMatrix& m, const ContinuationConfig& config,
                  std::span<const double> u0);

/// Writes one snapshot column per line, space separated, 17 significant digits.
void write_snapshots(const SnapshotMatrix& s, const std::filesystem::path& path);
SnapshotMatrix read_snapshots(const std::filesystem::path& path);

}  // namespace eigenrom
