#include "eigenrom/rom.hpp"

#include <chrono>
#include <cmath>

#include "eigenrom/errors.hpp"
#include "eigenrom/fem.hpp"

namespace eigenrom {

namespace {

double quad(const DenseMatrix& k, std::span<const double> x) { return dot(x, matvec(k, x)); }

}  // namespace

ReducedOperators reduce(const CsrMatrix& a, const CsrMatrix& m, const DenseMatrix& V) {
  if (V.rows() != a.n_rows || a.n_rows != m.n_rows) throw DimensionError("reduce: basis and operators differ in size");
  const std::size_t n = V.cols();
  if (n == 0) throw ParameterError("reduce: empty basis");
  std::vector<Vector> cols(n), acols(n), mcols(n);
  for (std::size_t j = 0; j < n; ++j) {
    cols[j] = V.column(j);
    acols[j] = spmv(a, cols[j]);
    mcols[j] = spmv(m, cols[j]);
  }
  ReducedOperators ops;
  ops.A_N = DenseMatrix(n, n);
  ops.M_N = DenseMatrix(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      ops.A_N(i, j) = dot(cols[i], acols[j]);
      ops.M_N(i, j) = dot(cols[i], mcols[j]);
    }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) {
      ops.A_N(i, j) = ops.A_N(j, i) = 0.5 * (ops.A_N(i, j) + ops.A_N(j, i));
      ops.M_N(i, j) = ops.M_N(j, i) = 0.5 * (ops.M_N(i, j) + ops.M_N(j, i));
    }
  ops.V = V;
  return ops;
}

RomResult run_rom(const ReducedOperators& ops, std::span<const double> u0, const ContinuationConfig& config,
                  RomCheck check) {
  config.validate();
  const std::size_t n = ops.dim();
  if (n < 1) throw ParameterError("run_rom: reduced dimension must be at least 1");
  if (u0.size() != ops.V.rows()) throw DimensionError("run_rom: initial state has wrong length");

  const auto start = std::chrono::steady_clock::now();
  DenseMatrix system(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) system(i, j) = ops.A_N(i, j) + ops.M_N(i, j) / config.dt;
  const DenseCholesky chol(system);
  [[maybe_unused]] const DenseCholesky mass_check(ops.M_N);

  auto rayleigh = [&ops](std::span<const double> x) {
    const double den = quad(ops.M_N, x);
    if (!(den > 0.0)) throw NotSpdError("run_rom: reduced state has zero mass norm");
    return quad(ops.A_N, x) / den;
  };
  auto cross_check = [&](std::span<const double> x, double lambda) {
    if (!check.a || !check.m) return;
    const Vector lifted = matvec(ops.V, x);
    const double full = rayleigh_quotient(*check.a, *check.m, lifted);
    if (std::abs(full - lambda) > 1e-12 * std::abs(full))
      throw InternalError("run_rom: reduced and lifted Rayleigh quotients disagree");
  };

  RomResult res;
  SolveTrace& tr = res.trace;
  Vector x = matvec_t(ops.V, u0);
  double lambda = rayleigh(x);
  cross_check(x, lambda);
  tr.lambda_history.push_back(lambda);
  for (std::size_t k = 1; k <= config.max_steps; ++k) {
    Vector rhs = matvec(ops.M_N, x);
    for (auto& v : rhs) v *= lambda + 1.0 / config.dt;
    Vector next = chol.solve(rhs);
    double diff = 0.0;
    for (std::size_t i = 0; i < n; ++i) diff += (next[i] - x[i]) * (next[i] - x[i]);
    const double nnext = norm2(next);
    tr.last_change = std::sqrt(diff) / nnext;
    tr.n_steps = k;
    if (nnext < 1e-150 || nnext > 1e150)
      for (auto& v : next) v /= nnext;
    x = std::move(next);
    lambda = rayleigh(x);
    cross_check(x, lambda);
    tr.lambda_history.push_back(lambda);
    if (tr.last_change <= config.stop_tol) {
      tr.converged = true;
      break;
    }
  }
  tr.lambda = lambda;
  tr.final_vector = matvec(ops.V, x);
  res.reduced_final = std::move(x);
  tr.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

}  // namespace eigenrom
