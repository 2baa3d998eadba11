#pragma once

// Eigenvalues and eigenvectors of real square matrices.
//
// eigen() reduces to upper Hessenberg form with Householder reflections and
// runs the Francis implicit double-shift QR iteration with deflation on the
// active window. Eigenvectors come from inverse iteration on the original
// matrix. Results follow a fixed convention:
//   * eigenvalues sorted lexicographically by (re, im), conjugate pairs exact;
//   * eigenvector columns have unit 2-norm, and their first component of
//     largest magnitude is real and non-negative.

#include <cstddef>
#include <vector>

#include "einode/matrix.hpp"

namespace einode {

/// Interleaved (re, im) representation of a complex sequence.
using ComplexVec = std::vector<double>;

struct EigenResult {
  std::vector<Complex> values;
  ComplexMatrix vectors;  // eigenvector i in column i
  std::size_t iterations = 0;
  /// Two eigenvalues lie within the degeneracy threshold of each other.
  bool degenerate = false;
};

struct EigenOptions {
  double tol = 1e-9;
  /// QR sweeps over all deflation windows; 0 selects 30·n.
  std::size_t max_iterations = 0;
  /// Eigenvalue separation below which the result is flagged degenerate.
  double degeneracy_threshold = 1e-8;
};

/// Throws ConvergenceError (with best-so-far estimates) when the QR sweep budget runs out.
EigenResult eigen(const RealMatrix& a, const EigenOptions& options = {});
EigenResult eigen(const RealMatrix& a, double tol, std::size_t max_iterations);

/// Closed-form 2×2 decomposition from the characteristic polynomial; used as a test oracle.
EigenResult eigen2x2_closed_form(const RealMatrix& a);

ComplexVec to_interleaved(const std::vector<Complex>& values);
std::vector<Complex> from_interleaved(const ComplexVec& interleaved);

/// Applies the unit-norm / real-dominant-component convention to one vector in place.
void normalize_eigenvector(std::span<Complex> v);

/// Frequency |Im λ| / 2π in Hz.
double eigen_frequency(Complex lambda);
/// Damping −Re λ / |λ|; 0 for |λ| < 1e-12.
double eigen_damping(Complex lambda);
/// max|Re λ| / max(min|Re λ|, floor); 1 when every |Re λ| is below the floor.
double stiffness_ratio(const std::vector<Complex>& values, double floor = 1e-6);

}  // namespace einode
