#include "eigenrom/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "eigenrom/adapt.hpp"
#include "eigenrom/errors.hpp"
#include "eigenrom/fem.hpp"
#include "eigenrom/pod.hpp"
#include "eigenrom/rom.hpp"

namespace eigenrom {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kPi = 3.14159265358979323846;

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Mesh build_mesh(const ExperimentConfig& c, int n) {
  if (c.mesh.file) return read_mesh(*c.mesh.file);
  if (c.domain == Domain::square) {
    SquarePattern p = SquarePattern::crisscross;
    if (c.mesh.pattern == "right") p = SquarePattern::right;
    if (c.mesh.pattern == "left") p = SquarePattern::left;
    return generate_square(p, n, kPi);
  }
  return generate_lshape(c.mesh.pattern == "mixed" ? LShapePattern::mixed : LShapePattern::crisscross, n);
}

std::filesystem::path with_suffix(const std::filesystem::path& p, const std::string& tag) {
  std::filesystem::path out = p;
  out.replace_filename(p.stem().string() + tag + p.extension().string());
  return out;
}

std::string row_label(const ExperimentConfig& c, std::size_t stride) {
  std::string label = c.mesh.label();
  if (c.strides.size() > 1) label += "/S" + std::to_string(stride);
  return label;
}

double exact_square_mode(double x, double y) { return std::sin(x) * std::sin(y); }

/// Columns of `all` (sampled every `base` steps) at multiples of `stride`.
SnapshotMatrix subsample(const SnapshotMatrix& all, std::size_t stride) {
  SnapshotMatrix s;
  s.n_rows = all.n_rows;
  s.stride = stride;
  const std::size_t every = stride / all.stride;
  for (std::size_t j = 0; j < all.n_cols(); ++j)
    if ((j + 1) % every == 0) s.columns.push_back(all.columns[j]);
  return s;
}

struct LevelOutput {
  std::vector<ResultRow> rows;  // one per stride
  std::optional<Mesh> mesh;
  std::vector<std::vector<double>> singvals;
};

LevelOutput run_uniform_level(const ExperimentConfig& c, int level) {
  const int n = c.mesh.file ? level : c.n_start << level;
  Mesh mesh = build_mesh(c, c.n_start << level);
  if (c.mesh.file)
    for (int k = 0; k < level; ++k) mesh = uniform_refine(mesh);
  const DofMap dm = build_dofmap(mesh, c.fe_degree);
  const Operators ops = assemble(mesh, dm);

  ContinuationConfig cc = c.continuation;
  cc.snapshot_stride = std::reduce(c.strides.begin(), c.strides.end(), c.strides.front(),
                                   [](std::size_t a, std::size_t b) { return std::gcd(a, b); });
  const FomResult fom = run_fom(ops.stiffness, ops.mass, cc);
  if (!fom.trace.converged)
    throw NonConvergenceError("FOM did not converge within " + std::to_string(cc.max_steps) + " steps",
                              fom.trace.last_change);
  log_message(LogLevel::info, "level " + std::to_string(level) + ": " + std::to_string(dm.n_dof_total) +
                                  " dofs, FOM " + std::to_string(fom.trace.n_steps) + " steps");

  double eps = c.pod_eps;
  if (c.pod_eps_exact) eps = exact_reference_eps(ops.mass, dm, fom.trace.final_vector, exact_square_mode);
  const Vector u0 = initial_state(cc, dm.n_free());

  LevelOutput out;
  for (std::size_t stride : c.strides) {
    const auto offline_start = std::chrono::steady_clock::now();
    const SnapshotMatrix s = subsample(fom.snapshots, stride);
    const CorrelationSpectrum spec = correlation_spectrum(s);
    const std::size_t N = select_dim(spec.singular_values, eps);
    const PodBasis pod = build_pod(s, N);
    const double offline = seconds_since(offline_start);

    const auto online_start = std::chrono::steady_clock::now();
    const ReducedOperators red = reduce(ops.stiffness, ops.mass, pod.V);
    const RomResult rom = run_rom(red, u0, c.continuation);
    const double online = seconds_since(online_start);
    if (!rom.trace.converged)
      throw NonConvergenceError("ROM did not converge within " + std::to_string(cc.max_steps) + " steps",
                                rom.trace.last_change);
    log_message(LogLevel::debug, "stride " + std::to_string(stride) + ": " + std::to_string(s.n_cols()) +
                                     " snapshots, N = " + std::to_string(N) + ", POD offline " +
                                     std::to_string(offline) + " s");

    ResultRow row;
    row.mesh = row_label(c, stride);
    row.n = n;
    row.dof = dm.n_dof_total;
    row.lambda_fom = fom.trace.lambda;
    row.lambda_rom = rom.trace.lambda;
    row.n_pod = N;
    row.fom_seconds = fom.trace.wall_time;
    row.rom_seconds = online;
    out.rows.push_back(row);
    out.singvals.push_back(spec.singular_values);
  }
  out.mesh = std::move(mesh);
  return out;
}

void fill_rates(const ExperimentConfig& c, std::vector<ResultRow>& rows) {
  const double exact = reference_lambda(c.domain);
  const RateMode mode = c.adaptive ? RateMode::adaptive : RateMode::uniform;
  for (std::size_t s = 0; s < c.strides.size(); ++s) {
    std::vector<std::size_t> idx;
    for (std::size_t i = s; i < rows.size(); i += c.strides.size()) idx.push_back(i);
    std::vector<double> ef, er, sizes;
    for (std::size_t i : idx) {
      ef.push_back(rows[i].lambda_fom - exact);
      er.push_back(rows[i].lambda_rom - exact);
      sizes.push_back(static_cast<double>(rows[i].dof));
    }
    const auto rf = compute_rate(ef, sizes, mode);
    const auto rr = compute_rate(er, sizes, mode);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      rows[idx[k]].rate_fom = rf[k];
      rows[idx[k]].rate_rom = rr[k];
    }
  }
}

void record_failure(ExperimentResult& result, const std::exception& e) {
  result.error = e.what();
  result.nonconvergence = dynamic_cast<const NonConvergenceError*>(&e) != nullptr;
  log_message(LogLevel::error, std::string("schedule aborted: ") + e.what());
}

ExperimentResult run_uniform(const ExperimentConfig& c) {
  ExperimentResult result;
  const int n_levels = c.levels;
  std::vector<std::optional<LevelOutput>> outputs(n_levels);
  std::vector<std::exception_ptr> errors(n_levels);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int level = next++; level < n_levels; level = next++) {
      try {
        outputs[level] = run_uniform_level(c, level);
      } catch (...) {
        errors[level] = std::current_exception();
      }
    }
  };
  const int n_threads = std::max(1, std::min(c.jobs, n_levels));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  int done = 0;
  for (; done < n_levels; ++done) {
    if (errors[done]) {
      try {
        std::rethrow_exception(errors[done]);
      } catch (const std::exception& e) {
        record_failure(result, e);
      }
      break;
    }
    for (auto& r : outputs[done]->rows) result.rows.push_back(r);
  }
  fill_rates(c, result.rows);

  if (done > 0) {
    const LevelOutput& last = *outputs[done - 1];
    if (c.dump_mesh) write_mesh(*last.mesh, *c.dump_mesh);
    if (c.dump_singvals) {
      for (std::size_t s = 0; s < c.strides.size(); ++s) {
        const auto path = c.strides.size() > 1 ? with_suffix(*c.dump_singvals, "_S" + std::to_string(c.strides[s]))
                                               : *c.dump_singvals;
        emit_singvals(last.singvals[s], path);
      }
    }
  }
  return result;
}

ExperimentResult run_adaptive(const ExperimentConfig& c) {
  ExperimentResult result;
  if (c.levels == 0) return result;
  AdaptiveConfig ac;
  ac.fe_degree = c.fe_degree;
  ac.theta = c.theta;
  ac.n_refinements = static_cast<std::size_t>(c.levels - 1);
  ac.continuation = c.continuation;
  ac.continuation.snapshot_stride = c.strides.front();
  ac.pod.eps = c.pod_eps;

  std::optional<Mesh> last_mesh;
  std::vector<double> last_sv;
  auto on_level = [&](const AdaptiveRecord& rec, const Mesh& mesh) {
    ResultRow row;
    row.mesh = c.mesh.label();
    row.n = static_cast<int>(rec.level);
    row.dof = rec.n_dof;
    row.lambda_fom = rec.lambda_fom;
    row.lambda_rom = rec.lambda_rom;
    row.n_pod = rec.n_pod;
    row.fom_seconds = rec.fom_time;
    row.rom_seconds = rec.rom_time;
    result.rows.push_back(row);
    log_message(LogLevel::info, "adaptive level " + std::to_string(rec.level) + ": " + std::to_string(rec.n_dof) +
                                    " dofs, eta " + std::to_string(rec.eta_total));
    if (c.dump_mesh) last_mesh = mesh;
    last_sv = rec.singular_values;
  };
  try {
    adaptive_solve(build_mesh(c, c.n_start), ac, on_level);
  } catch (const std::exception& e) {
    record_failure(result, e);
  }
  fill_rates(c, result.rows);
  if (last_mesh) write_mesh(*last_mesh, *c.dump_mesh);
  if (c.dump_singvals && !last_sv.empty()) emit_singvals(last_sv, *c.dump_singvals);
  return result;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s, const std::filesystem::path& path) {
  if (s.empty()) return kNaN;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) throw ValidationError(path.string() + ": malformed number '" + s + "'");
  return v;
}

}  // namespace

double reference_lambda(Domain d) { return d == Domain::square ? kSquareLambda : kLShapeLambda; }

MeshSpec MeshSpec::parse(const std::string& text) {
  MeshSpec m;
  if (text.rfind("file:", 0) == 0) {
    const std::string path = text.substr(5);
    if (path.empty()) throw ParameterError("mesh: empty file path");
    m.pattern = "file";
    m.file = path;
    return m;
  }
  if (text != "crisscross" && text != "right" && text != "left" && text != "mixed")
    throw ParameterError("mesh: unknown pattern '" + text + "'");
  m.pattern = text;
  return m;
}

std::string MeshSpec::label() const { return file ? "file" : pattern; }

ExperimentConfig::ExperimentConfig() { continuation.solver = LinearSolverKind::cholesky; }

void ExperimentConfig::validate() const {
  continuation.validate();
  if (fe_degree != 1 && fe_degree != 2) throw ParameterError("fe degree must be 1 or 2");
  if (n_start < 1) throw ParameterError("n-start must be positive");
  if (levels < 0) throw ParameterError("levels must be nonnegative");
  if (!adaptive && !mesh.file && levels > 0 && (static_cast<long long>(n_start) << (levels - 1)) > (1 << 14))
    throw ParameterError("mesh size n_start * 2^(levels-1) is too large");
  if (strides.empty()) throw ParameterError("at least one snapshot stride is required");
  for (std::size_t s : strides)
    if (s < 1) throw ParameterError("snapshot strides must be positive");
  if (adaptive && strides.size() > 1) throw ParameterError("adaptive runs take a single snapshot stride");
  if (adaptive && !(theta > 0.0 && theta <= 1.0)) throw ParameterError("theta must lie in (0,1]");
  if (jobs < 1) throw ParameterError("jobs must be at least 1");
  if (pod_eps_exact && domain != Domain::square)
    throw ParameterError("the exact-reference POD tolerance needs the square domain");
  if (pod_eps_exact && adaptive) throw ParameterError("the exact-reference POD tolerance is not available for adaptive runs");
  if (!pod_eps_exact && !(pod_eps > 0.0 && pod_eps < 1.0)) throw ParameterError("pod-eps must lie in (0,1)");
  if (!mesh.file) {
    if (mesh.pattern == "mixed" && domain != Domain::lshape) throw ParameterError("the mixed mesh needs the lshape domain");
    if ((mesh.pattern == "left" || mesh.pattern == "right") && domain != Domain::square)
      throw ParameterError("left and right meshes need the square domain");
  }
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  return config.adaptive ? run_adaptive(config) : run_uniform(config);
}

std::vector<double> compute_rate(std::span<const double> errors, std::span<const double> sizes, RateMode mode) {
  if (sizes.size() != errors.size())
    throw DimensionError("compute_rate: errors and sizes differ in length");
  std::vector<double> rates(errors.size(), kNaN);
  for (std::size_t k = 1; k < errors.size(); ++k) {
    const double prev = errors[k - 1], cur = errors[k];
    if (!(prev > 0.0 && cur > 0.0)) {
      log_message(LogLevel::error, "compute_rate: nonpositive error at entry " + std::to_string(k));
      continue;
    }
    if (mode == RateMode::uniform) {
      rates[k] = std::log2(prev / cur);
    } else {
      const double growth = std::log(sizes[k] / sizes[k - 1]);
      if (growth != 0.0) rates[k] = 2.0 * std::log(prev / cur) / growth;
    }
  }
  return rates;
}

void emit_csv(std::span<const ResultRow> rows, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open CSV for writing: " + path.string());
  os << "mesh,n,dof,lambda_fom,lambda_rom,rate_fom,rate_rom,n_pod,fom_s,rom_s\n";
  for (const auto& r : rows)
    os << r.mesh << ',' << r.n << ',' << r.dof << ',' << format_double(r.lambda_fom) << ','
       << format_double(r.lambda_rom) << ',' << format_double(r.rate_fom) << ',' << format_double(r.rate_rom) << ','
       << r.n_pod << ',' << format_double(r.fom_seconds) << ',' << format_double(r.rom_seconds) << '\n';
  if (!os) throw IoError("failed writing CSV: " + path.string());
}

std::vector<ResultRow> read_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open CSV: " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw ValidationError(path.string() + ": missing header");
  std::vector<ResultRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 10) throw ValidationError(path.string() + ": expected 10 fields in '" + line + "'");
    ResultRow r;
    r.mesh = f[0];
    r.n = std::stoi(f[1]);
    r.dof = std::stoull(f[2]);
    r.lambda_fom = parse_double(f[3], path);
    r.lambda_rom = parse_double(f[4], path);
    r.rate_fom = parse_double(f[5], path);
    r.rate_rom = parse_double(f[6], path);
    r.n_pod = std::stoull(f[7]);
    r.fom_seconds = parse_double(f[8], path);
    r.rom_seconds = parse_double(f[9], path);
    rows.push_back(r);
  }
  return rows;
}

void emit_singvals(std::span<const double> singular_values, const std::filesystem::path& path) {
  write_singular_values(singular_values, path);
}

LogLevel log_level() {
  const char* env = std::getenv("EIGENROM_LOG");
  if (!env) return LogLevel::error;
  const std::string v = env;
  if (v == "debug") return LogLevel::debug;
  if (v == "info") return LogLevel::info;
  return LogLevel::error;
}

void log_message(LogLevel level, const std::string& message) {
  static std::mutex mutex;
  if (level > log_level()) return;
  static constexpr const char* names[] = {"error", "info", "debug"};
  std::lock_guard lock(mutex);
  std::cerr << "[eigenrom " << names[static_cast<int>(level)] << "] " << message << '\n';
}

}  // namespace eigenrom
