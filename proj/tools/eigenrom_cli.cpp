#include <CLI11.hpp>

#include <iostream>
#include <sstream>

#include "eigenrom/errors.hpp"
#include "eigenrom/harness.hpp"

namespace {

std::vector<std::size_t> parse_strides(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    const long v = std::stol(item, &pos);
    if (pos != item.size() || v < 1) throw eigenrom::ParameterError("invalid stride list '" + text + "'");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw eigenrom::ParameterError("empty stride list");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"First Laplace-Dirichlet eigenpair by time continuation with a POD reduced model"};
  app.require_subcommand(1);
  CLI::App* run = app.add_subcommand("run", "Run one experiment schedule and write a CSV table");

  std::string domain = "square", mesh = "crisscross", pod_eps = "1e-7", init = "ones", solver = "cholesky";
  std::string strides, out, dump_sv, dump_mesh;
  int fe = 1, n_start = 16, levels = 6, jobs = 1;
  double dt = 0.1, stop_tol = 1e-8, theta = 0.5;
  std::size_t stride = 4, max_steps = 100000;
  std::uint64_t seed = 0;
  bool adaptive = false;

  run->add_option("--domain", domain, "square or lshape")->check(CLI::IsMember({"square", "lshape"}));
  run->add_option("--mesh", mesh, "crisscross, right, left, mixed or file:<path>");
  run->add_option("--fe", fe, "Lagrange degree")->check(CLI::IsMember({1, 2}));
  run->add_option("--n-start", n_start, "cells per unit length on the first level");
  run->add_option("--levels", levels, "uniform levels (n doubles) or adaptive levels");
  run->add_option("--dt", dt, "fictitious time step");
  run->add_option("--stop-tol", stop_tol, "relative change stopping tolerance");
  run->add_option("--max-steps", max_steps, "continuation step cap");
  run->add_option("--stride", stride, "snapshot stride");
  run->add_option("--strides", strides, "comma separated snapshot strides, overrides --stride");
  run->add_option("--pod-eps", pod_eps, "POD energy tolerance, or 'exact' (square only)");
  run->add_flag("--adaptive", adaptive, "solve-estimate-mark-refine instead of uniform levels");
  run->add_option("--theta", theta, "Doerfler marking fraction");
  run->add_option("--init", init, "initial guess")->check(CLI::IsMember({"ones", "random"}));
  run->add_option("--seed", seed, "seed of the random initial guess");
  run->add_option("--solver", solver, "linear solver")->check(CLI::IsMember({"cg", "cholesky"}));
  run->add_option("--jobs", jobs, "worker threads for independent levels");
  run->add_option("--out", out, "output CSV")->required();
  run->add_option("--dump-singvals", dump_sv, "singular values of the final level's snapshot matrix");
  run->add_option("--dump-mesh", dump_mesh, "final level mesh");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  eigenrom::ExperimentConfig cfg;
  try {
    cfg.domain = domain == "square" ? eigenrom::Domain::square : eigenrom::Domain::lshape;
    cfg.mesh = eigenrom::MeshSpec::parse(mesh);
    cfg.fe_degree = fe;
    cfg.n_start = n_start;
    cfg.levels = levels;
    cfg.adaptive = adaptive;
    cfg.theta = theta;
    cfg.continuation.dt = dt;
    cfg.continuation.stop_tol = stop_tol;
    cfg.continuation.max_steps = max_steps;
    cfg.continuation.initial_guess = init == "ones" ? eigenrom::InitialGuess::ones : eigenrom::InitialGuess::random;
    cfg.continuation.seed = seed;
    cfg.continuation.solver =
        solver == "cg" ? eigenrom::LinearSolverKind::cg : eigenrom::LinearSolverKind::cholesky;
    cfg.strides = strides.empty() ? std::vector<std::size_t>{stride} : parse_strides(strides);
    if (pod_eps == "exact") {
      cfg.pod_eps_exact = true;
    } else {
      std::size_t pos = 0;
      cfg.pod_eps = std::stod(pod_eps, &pos);
      if (pos != pod_eps.size()) throw eigenrom::ParameterError("invalid --pod-eps '" + pod_eps + "'");
    }
    cfg.jobs = jobs;
    if (!dump_sv.empty()) cfg.dump_singvals = dump_sv;
    if (!dump_mesh.empty()) cfg.dump_mesh = dump_mesh;
    cfg.validate();
  } catch (const std::exception& e) {
    std::cerr << "eigenrom: " << e.what() << '\n';
    return 1;
  }

  try {
    const eigenrom::ExperimentResult res = eigenrom::run_experiment(cfg);
    eigenrom::emit_csv(res.rows, out);
    if (res.error) {
      std::cerr << "eigenrom: " << *res.error << '\n';
      return res.nonconvergence ? 2 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "eigenrom: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
