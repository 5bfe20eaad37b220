#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "eigenrom/adapt.hpp"
#include "eigenrom/continuation.hpp"
#include "eigenrom/errors.hpp"
#include "eigenrom/fem.hpp"
#include "eigenrom/harness.hpp"
#include "eigenrom/mesh.hpp"
#include "eigenrom/pod.hpp"
#include "eigenrom/rom.hpp"

namespace py = pybind11;
using namespace eigenrom;

namespace {

constexpr double kPi = 3.14159265358979323846;

py::array_t<double> to_numpy(const Vector& v) {
  py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

Mesh make_mesh(const std::string& domain, const std::string& pattern, int n) {
  if (domain == "square") {
    if (pattern == "crisscross") return generate_square(SquarePattern::crisscross, n, kPi);
    if (pattern == "right") return generate_square(SquarePattern::right, n, kPi);
    if (pattern == "left") return generate_square(SquarePattern::left, n, kPi);
  } else if (domain == "lshape") {
    if (pattern == "crisscross") return generate_lshape(LShapePattern::crisscross, n);
    if (pattern == "mixed") return generate_lshape(LShapePattern::mixed, n);
  } else {
    throw ParameterError("unknown domain '" + domain + "'");
  }
  throw ParameterError("pattern '" + pattern + "' is not available on the " + domain + " domain");
}

ContinuationConfig continuation(double dt, double stop_tol, std::size_t max_steps, std::size_t stride,
                                const std::string& init, std::uint64_t seed, const std::string& solver) {
  ContinuationConfig c;
  c.dt = dt;
  c.stop_tol = stop_tol;
  c.max_steps = max_steps;
  c.snapshot_stride = stride;
  if (init != "ones" && init != "random") throw ParameterError("init must be 'ones' or 'random'");
  c.initial_guess = init == "ones" ? InitialGuess::ones : InitialGuess::random;
  c.seed = seed;
  if (solver != "cg" && solver != "cholesky") throw ParameterError("solver must be 'cg' or 'cholesky'");
  c.solver = solver == "cg" ? LinearSolverKind::cg : LinearSolverKind::cholesky;
  return c;
}

py::dict solve(const std::string& domain, const std::string& pattern, int n, int degree, double dt, double stop_tol,
               std::size_t max_steps, std::size_t stride, double pod_eps, const std::string& init,
               std::uint64_t seed, const std::string& solver) {
  const ContinuationConfig c = continuation(dt, stop_tol, max_steps, stride, init, seed, solver);
  c.validate();
  Mesh mesh;
  DofMap dm;
  Operators ops;
  FomResult fom;
  {
    py::gil_scoped_release nogil;
    mesh = make_mesh(domain, pattern, n);
    dm = build_dofmap(mesh, degree);
    ops = assemble(mesh, dm);
    fom = run_fom(ops.stiffness, ops.mass, c);
  }
  py::dict out;
  out["dof"] = dm.n_dof_total;
  out["lambda_fom"] = fom.trace.lambda;
  out["n_steps"] = fom.trace.n_steps;
  out["converged"] = fom.trace.converged;
  out["lambda_history"] = fom.trace.lambda_history;
  out["eigenvector"] = to_numpy(fom.trace.final_vector);
  if (!fom.trace.converged || fom.snapshots.n_cols() == 0) return out;

  const CorrelationSpectrum spec = correlation_spectrum(fom.snapshots);
  const std::size_t N = select_dim(spec.singular_values, pod_eps);
  const PodBasis pod = build_pod(fom.snapshots, N);
  const RomResult rom = run_rom(reduce(ops.stiffness, ops.mass, pod.V), initial_state(c, dm.n_free()), c);
  out["singular_values"] = spec.singular_values;
  out["n_pod"] = N;
  out["lambda_rom"] = rom.trace.lambda;
  out["rom_converged"] = rom.trace.converged;
  return out;
}

py::list experiment(const std::string& domain, const std::string& mesh, int fe, int n_start, int levels,
                    bool adaptive, double theta, std::vector<std::size_t> strides, py::object pod_eps, int jobs,
                    const std::string& solver, std::size_t max_steps) {
  ExperimentConfig cfg;
  if (domain != "square" && domain != "lshape") throw ParameterError("unknown domain '" + domain + "'");
  cfg.domain = domain == "square" ? Domain::square : Domain::lshape;
  cfg.mesh = MeshSpec::parse(mesh);
  cfg.fe_degree = fe;
  cfg.n_start = n_start;
  cfg.levels = levels;
  cfg.adaptive = adaptive;
  cfg.theta = theta;
  cfg.strides = std::move(strides);
  if (py::isinstance<py::str>(pod_eps)) {
    if (pod_eps.cast<std::string>() != "exact") throw ParameterError("pod_eps must be a number or 'exact'");
    cfg.pod_eps_exact = true;
  } else {
    cfg.pod_eps = pod_eps.cast<double>();
  }
  cfg.jobs = jobs;
  cfg.continuation.solver = continuation(0.1, 1e-8, max_steps, 4, "ones", 0, solver).solver;
  cfg.continuation.max_steps = max_steps;
  ExperimentResult r;
  {
    py::gil_scoped_release nogil;
    r = run_experiment(cfg);
  }
  if (r.error) {
    if (r.nonconvergence) throw NonConvergenceError(*r.error, 0.0);
    throw Error(*r.error);
  }
  py::list rows;
  for (const auto& row : r.rows) {
    py::dict d;
    d["mesh"] = row.mesh;
    d["n"] = row.n;
    d["dof"] = row.dof;
    d["lambda_fom"] = row.lambda_fom;
    d["lambda_rom"] = row.lambda_rom;
    d["rate_fom"] = row.rate_fom;
    d["rate_rom"] = row.rate_rom;
    d["n_pod"] = row.n_pod;
    d["fom_seconds"] = row.fom_seconds;
    d["rom_seconds"] = row.rom_seconds;
    rows.append(d);
  }
  return rows;
}

}  // namespace

PYBIND11_MODULE(_eigenrom, m) {
  m.doc() = "First Laplace-Dirichlet eigenpair by time continuation, with a POD reduced model";

  auto base = py::register_exception<Error>(m, "EigenromError", PyExc_RuntimeError);
  py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
  py::register_exception<NonConvergenceError>(m, "NonConvergenceError", base.ptr());
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  m.attr("SQUARE_LAMBDA") = kSquareLambda;
  m.attr("LSHAPE_LAMBDA") = kLShapeLambda;

  m.def("solve", &solve, py::arg("domain") = "square", py::arg("pattern") = "crisscross", py::arg("n") = 16,
        py::arg("degree") = 1, py::arg("dt") = 0.1, py::arg("stop_tol") = 1e-8, py::arg("max_steps") = 100000,
        py::arg("stride") = 4, py::arg("pod_eps") = 1e-7, py::arg("init") = "ones", py::arg("seed") = 0,
        py::arg("solver") = "cholesky",
        "FOM continuation on one mesh followed by the POD reduced model.");

  m.def("run_experiment", &experiment, py::arg("domain") = "square", py::arg("mesh") = "crisscross",
        py::arg("fe") = 1, py::arg("n_start") = 16, py::arg("levels") = 6, py::arg("adaptive") = false,
        py::arg("theta") = 0.5, py::arg("strides") = std::vector<std::size_t>{4}, py::arg("pod_eps") = 1e-7,
        py::arg("jobs") = 1, py::arg("solver") = "cholesky", py::arg("max_steps") = 100000, "Run a refinement schedule; one dict per row.");

  m.def(
      "compute_rate",
      [](std::vector<double> errors, std::vector<double> sizes, const std::string& mode) {
        if (mode != "uniform" && mode != "adaptive") throw ParameterError("mode must be 'uniform' or 'adaptive'");
        return compute_rate(errors, sizes, mode == "uniform" ? RateMode::uniform : RateMode::adaptive);
      },
      py::arg("errors"), py::arg("sizes"), py::arg("mode") = "uniform");

  m.def(
      "pod",
      [](py::array_t<double, py::array::f_style | py::array::forcecast> snapshots, std::size_t N) {
        if (snapshots.ndim() != 2) throw DimensionError("snapshots must be a 2-D array");
        SnapshotMatrix s;
        s.n_rows = static_cast<std::size_t>(snapshots.shape(0));
        for (py::ssize_t j = 0; j < snapshots.shape(1); ++j)
          s.columns.emplace_back(snapshots.data(0, j), snapshots.data(0, j) + s.n_rows);
        const PodBasis p = build_pod(s, N);
        py::array_t<double> v({static_cast<py::ssize_t>(p.V.rows()), static_cast<py::ssize_t>(p.V.cols())});
        std::copy(p.V.data().begin(), p.V.data().end(), v.mutable_data());
        return py::make_tuple(v, p.singular_values);
      },
      py::arg("snapshots"), py::arg("N"), "POD basis (rows x N) and all singular values of a snapshot matrix.");

  m.def("select_dim", [](std::vector<double> sv, double eps) { return select_dim(sv, eps); },
        py::arg("singular_values"), py::arg("eps"));
}
