#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eigenrom/continuation.hpp"
#include "eigenrom/mesh.hpp"

namespace eigenrom {

enum class Domain { square, lshape };

inline constexpr double kSquareLambda = 2.0;
inline constexpr double kLShapeLambda = 9.6397238440219;

double reference_lambda(Domain d);

/// Mesh source: a structured pattern or a mesh file.
struct MeshSpec {
  std::string pattern = "crisscross";  // crisscross | right | left | mixed
  std::optional<std::filesystem::path> file;

  /// "crisscross" or "file:<path>".
  static MeshSpec parse(const std::string& text);
  std::string label() const;
};

struct ExperimentConfig {
  Domain domain = Domain::square;
  MeshSpec mesh;
  int fe_degree = 1;
  int n_start = 16;
  /// Uniform: mesh sizes n_start * 2^k, k < levels. Adaptive: number of
  /// solve-estimate-mark-refine levels.
  int levels = 6;
  bool adaptive = false;
  double theta = 0.5;
  ContinuationConfig continuation;
  std::vector<std::size_t> strides{4};
  /// Fixed POD tolerance; ignored when pod_eps_exact is set.
  double pod_eps = 1e-7;
  /// Use the distance to the exact eigenfunction as tolerance (square only).
  bool pod_eps_exact = false;
  int jobs = 1;
  std::optional<std::filesystem::path> dump_singvals;
  std::optional<std::filesystem::path> dump_mesh;

  ExperimentConfig();
  /// Throws ParameterError on an invalid combination.
  void validate() const;
};

struct ResultRow {
  std::string mesh;
  int n = 0;  // cells per unit length; the level index for file meshes and adaptive runs
  std::size_t dof = 0;
  double lambda_fom = 0.0;
  double lambda_rom = 0.0;
  double rate_fom = 0.0;  // NaN on the first row of a schedule
  double rate_rom = 0.0;
  std::size_t n_pod = 0;
  double fom_seconds = 0.0;
  double rom_seconds = 0.0;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;
  /// Set when the schedule was aborted; rows then hold the completed part.
  std::optional<std::string> error;
  bool nonconvergence = false;
};

ExperimentResult run_experiment(const ExperimentConfig& config);

enum class RateMode { uniform, adaptive };

/// Uniform: log2(e_{k-1}/e_k). Adaptive: 2 log(e_{k-1}/e_k) / log(d_k/d_{k-1})
/// with d the dof counts. The first entry is NaN, as is any rate touching
/// a nonpositive error.
std::vector<double> compute_rate(std::span<const double> errors, std::span<const double> sizes, RateMode mode);

void emit_csv(std::span<const ResultRow> rows, const std::filesystem::path& path);
std::vector<ResultRow> read_csv(const std::filesystem::path& path);
void emit_singvals(std::span<const double> singular_values, const std::filesystem::path& path);

enum class LogLevel { error = 0, info = 1, debug = 2 };
/// From EIGENROM_LOG (default error).
LogLevel log_level();
void log_message(LogLevel level, const std::string& message);

}  // namespace eigenrom
