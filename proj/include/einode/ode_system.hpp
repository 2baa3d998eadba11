#pragma once

#include <cstddef>
#include <span>

#include "einode/matrix.hpp"

namespace einode {

/// Right-hand side ẋ = f(x, θ) of an autonomous ODE as seen by the integrator.
///
/// Implementations may keep scratch buffers, so one instance must not be shared between
/// concurrently running solves.
class OdeSystem {
 public:
  virtual ~OdeSystem() = default;

  virtual std::size_t state_dim() const = 0;
  virtual std::size_t parameter_count() const = 0;

  virtual void rhs(std::span<const double> x, std::span<double> dx) = 0;

  /// Value plus ∂f/∂x (n×n, row-major) and ∂f/∂θ (n×P, row-major).
  virtual void rhs_with_jacobians(std::span<const double> x, std::span<double> dx,
                                  std::span<double> state_jacobian,
                                  std::span<double> param_jacobian) = 0;

  /// The system matrix A = ∂f/∂x at x.
  virtual RealMatrix system_matrix(std::span<const double> x) = 0;
};

}  // namespace einode
