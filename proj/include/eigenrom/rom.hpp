#pragma once

#include <span>

#include "eigenrom/continuation.hpp"
#include "eigenrom/linalg.hpp"

namespace eigenrom {

/// Galerkin projections V^T A V and V^T M V of the full operators.
struct ReducedOperators {
  DenseMatrix A_N;
  DenseMatrix M_N;
  DenseMatrix V;
  std::size_t dim() const { return A_N.rows(); }
};

ReducedOperators reduce(const CsrMatrix& a, const CsrMatrix& m, const DenseMatrix& V);

struct RomResult {
  SolveTrace trace;  // final_vector holds the lifted state V U_N
  Vector reduced_final;
};

/// Optional per-iteration cross-check of the reduced Rayleigh quotient
/// against the lifted full-space one (relative 1e-12).
struct RomCheck {
  const CsrMatrix* a = nullptr;
  const CsrMatrix* m = nullptr;
};

/// Implicit Euler continuation in the reduced space, starting from V^T u0.
RomResult run_rom(const ReducedOperators& ops, std::span<const double> u0, const ContinuationConfig& config,
                  RomCheck check = {});

}  // namespace eigenrom
