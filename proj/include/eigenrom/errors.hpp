#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace eigenrom {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user-supplied parameter (mesh size, tolerance, flag combination).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Requested POD dimension exceeds the numerical rank of the snapshots.
class RankError : public ParameterError {
 public:
  RankError(const std::string& what, std::size_t rank) : ParameterError(what), rank_(rank) {}
  std::size_t rank() const noexcept { return rank_; }

 private:
  std::size_t rank_;
};

/// Structural problem in a mesh or an input file.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Matrix expected to be symmetric positive definite is not.
class NotSpdError : public Error {
 public:
  using Error::Error;
};

class NotSymmetricError : public Error {
 public:
  using Error::Error;
};

/// Iterative process hit its iteration cap.
class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, double achieved)
      : Error(what), achieved_(achieved) {}
  /// Relative residual (or change) achieved when the cap was hit.
  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Violated internal consistency (e.g. inconsistent refinement metadata).
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace eigenrom
