#include "eigenrom/continuation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "eigenrom/errors.hpp"
#include "eigenrom/fem.hpp"

namespace eigenrom {

void ContinuationConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ParameterError("time step dt must be positive");
  if (!(stop_tol > 0.0)) throw ParameterError("stopping tolerance must be positive");
  if (snapshot_stride < 1) throw ParameterError("snapshot stride must be at least 1");
  if (max_steps < 1) throw ParameterError("max_steps must be at least 1");
  if (!(solver_tol > 0.0 && solver_tol < 1.0)) throw ParameterError("solver tolerance must lie in (0,1)");
}

DenseMatrix SnapshotMatrix::to_dense() const {
  DenseMatrix d(n_rows, columns.size());
  for (std::size_t j = 0; j < columns.size(); ++j) d.set_column(j, columns[j]);
  return d;
}

Vector initial_state(const ContinuationConfig& config, std::size_t n) {
  if (config.initial_guess == InitialGuess::ones) return Vector(n, 1.0);
  // Positive entries keep a nonzero component along the positive first mode.
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  Vector u(n);
  for (auto& v : u) v = dist(rng);
  return u;
}

ImplicitEulerOperator::ImplicitEulerOperator(const CsrMatrix& a, const CsrMatrix& m, double dt,
                                             LinearSolverKind kind, double solver_tol)
    : mass_(&m), dt_(dt), tol_(solver_tol), system_(csr_axpby(1.0, a, 1.0 / dt, m)) {
  if (a.n_rows != m.n_rows) throw DimensionError("stiffness and mass sizes differ");
  if (kind == LinearSolverKind::cholesky) factor_.emplace(system_);
}

Vector ImplicitEulerOperator::step(std::span<const double> u, double lambda) const {
  Vector rhs = spmv(*mass_, u);
  const double s = lambda + 1.0 / dt_;
  for (auto& v : rhs) v *= s;
  if (factor_) return factor_->solve(rhs);
  // The previous state is close to the next one near steady state.
  return pcg_solve(system_, rhs, tol_, u).x;
}

Vector fom_step(const CsrMatrix& a, const CsrMatrix& m, std::span<const double> u, double lambda, double dt,
                double solver_tol) {
  if (u.size() != a.n_rows) throw DimensionError("fom_step: state has wrong length");
  if (!(dt > 0.0)) throw ParameterError("fom_step: dt must be positive");
  return ImplicitEulerOperator(a, m, dt, LinearSolverKind::cg, solver_tol).step(u, lambda);
}

FomResult run_fom(const CsrMatrix& a, const CsrMatrix& m, const ContinuationConfig& config) {
  return run_fom(a, m, config, initial_state(config, a.n_rows));
}

FomResult run_fom(const CsrMatrix& a, const CsrMatrix& m, const ContinuationConfig& config,
                  std::span<const double> u0) {
  config.validate();
  if (a.n_rows == 0) throw ParameterError("run_fom: no free degrees of freedom");
  if (a.n_rows != m.n_rows || u0.size() != a.n_rows) throw DimensionError("run_fom: dimension mismatch");

  const auto start = std::chrono::steady_clock::now();
  FomResult res;
  res.snapshots.n_rows = a.n_rows;
  res.snapshots.stride = config.snapshot_stride;
  SolveTrace& tr = res.trace;

  const ImplicitEulerOperator op(a, m, config.dt, config.solver, config.solver_tol);
  Vector u(u0.begin(), u0.end());
  double lambda = rayleigh_quotient(a, m, u);
  tr.lambda_history.push_back(lambda);

  for (std::size_t k = 1; k <= config.max_steps; ++k) {
    Vector next = op.step(u, lambda);
    double diff = 0.0;
    for (std::size_t i = 0; i < next.size(); ++i) diff += (next[i] - u[i]) * (next[i] - u[i]);
    const double nnext = norm2(next);
    tr.last_change = std::sqrt(diff) / nnext;
    tr.n_steps = k;
    if (nnext < 1e-150 || nnext > 1e150)
      for (auto& v : next) v /= nnext;
    if (k % config.snapshot_stride == 0) res.snapshots.columns.push_back(next);
    u = std::move(next);
    lambda = rayleigh_quotient(a, m, u);
    tr.lambda_history.push_back(lambda);
    if (tr.last_change <= config.stop_tol) {
      tr.converged = true;
      break;
    }
  }
  tr.lambda = lambda;

  const double cross = csr_bilinear_form(m, u0, u);
  const double n0 = std::sqrt(csr_quadratic_form(m, u0));
  const double n1 = std::sqrt(csr_quadratic_form(m, u));
  // The first Dirichlet eigenfunction has one sign; a converged state with
  // both signs is a higher mode, reached from a start orthogonal to mode one.
  double umax = 0.0, umin = 0.0;
  for (double v : u) {
    umax = std::max(umax, v);
    umin = std::min(umin, v);
  }
  const double scale = std::max(umax, -umin);
  tr.orthogonal_start = std::abs(cross) <= 1e-14 * n0 * n1 || (umax > 1e-3 * scale && -umin > 1e-3 * scale);
  tr.final_vector = std::move(u);
  tr.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

void write_snapshots(const SnapshotMatrix& s, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open snapshot file for writing: " + path.string());
  os.precision(17);
  for (const auto& col : s.columns) {
    for (std::size_t i = 0; i < col.size(); ++i) os << (i ? " " : "") << col[i];
    os << '\n';
  }
  if (!os) throw IoError("failed writing snapshot file: " + path.string());
}

SnapshotMatrix read_snapshots(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open snapshot file: " + path.string());
  SnapshotMatrix s;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    Vector col;
    double v;
    while (ls >> v) col.push_back(v);
    if (!ls.eof()) throw ValidationError(path.string() + ": malformed snapshot value");
    if (!s.columns.empty() && col.size() != s.n_rows)
      throw ValidationError(path.string() + ": snapshot columns have different lengths");
    s.n_rows = col.size();
    s.columns.push_back(std::move(col));
  }
  return s;
}

}  // namespace eigenrom
