#pragma once

#include <stdexcept>
#include <string>
#include <vector>
#include <complex>

namespace einode {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not fit the operation.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// LU factorization hit a pivot below the singularity threshold.
class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

/// QR iteration did not converge; carries the diagonal estimates at the time of failure.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::vector<std::complex<double>> estimates)
      : Error(what), estimates_(std::move(estimates)) {}
  const std::vector<std::complex<double>>& estimates() const noexcept { return estimates_; }

 private:
  std::vector<std::complex<double>> estimates_;
};

/// Repeated eigenvalues make the eigenvector sensitivities undefined.
class DegeneracyError : public Error {
 public:
  using Error::Error;
};

/// Non-finite input or intermediate value.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// The adaptive integrator needed a step below the minimum step size.
class SolvabilityError : public Error {
 public:
  SolvabilityError(const std::string& what, double time, double max_real_eigenvalue)
      : Error(what), time_(time), max_real_eigenvalue_(max_real_eigenvalue) {}
  double time() const noexcept { return time_; }
  /// Largest real part of the system matrix eigenvalues at the failure state (NaN if unavailable).
  double max_real_eigenvalue() const noexcept { return max_real_eigenvalue_; }

 private:
  double time_;
  double max_real_eigenvalue_;
};

/// The integrator exhausted its step budget.
class BudgetError : public Error {
 public:
  using Error::Error;
};

/// Data timestamps do not line up with the solution save points.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration or command line.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace einode
