#pragma once

// Finite-difference oracle suites for the analytic derivative paths.

#include <cstdint>
#include <string>
#include <vector>

namespace einode {

struct GradcheckResult {
  std::string name;
  std::size_t cases = 0;
  double max_error = 0.0;  // relative, ‖fd − analytic‖∞ / ‖analytic‖∞ unless stated
  double tolerance = 0.0;
  bool passed = false;
};

/// Eigenvalue tangents against central differences of eigen(A + h·dA), nearest-neighbour matched.
GradcheckResult check_eigen_forward(std::size_t matrices, std::uint64_t seed);
/// ⟨eigen_reverse(Ḡ), dA⟩ against ⟨Ḡ, eigen_forward(dA).dD⟩ (relative to the magnitudes).
GradcheckResult check_eigen_reverse(std::size_t matrices, std::uint64_t seed);
/// System matrix and parameter tangents of the network right-hand side.
GradcheckResult check_rhs_derivatives(std::size_t cases, std::uint64_t seed);
/// ∂A/∂x and ∂A/∂θ of the system matrix.
GradcheckResult check_system_matrix_derivatives(std::size_t cases, std::uint64_t seed);
/// Full-solve ∂x(t1)/∂θ on a 2→hidden→1 network.
GradcheckResult check_solve_sensitivities(std::size_t hidden, double horizon, std::uint64_t seed);
/// Every row of loss_vector_and_jacobian with all six losses active.
std::vector<GradcheckResult> check_loss_rows(std::uint64_t seed);

/// All suites in a fixed order.
std::vector<GradcheckResult> run_gradcheck(std::uint64_t seed);

}  // namespace einode
