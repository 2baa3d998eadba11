#pragma once

// Tsit5 (Tsitouras 5(4)) explicit Runge-Kutta integration with dense output and
// discrete forward sensitivities ∂x/∂θ.
//
// Sensitivities differentiate the discrete map with the step sequence frozen to
// the one chosen by the primal controller: each stage carries S_i = ∂y_i/∂θ and
// K_i = J(y_i)·S_i + ∂f/∂θ(y_i), combined with the same weights as the states.
// The initial state does not depend on θ.

#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "einode/matrix.hpp"
#include "einode/ode_system.hpp"

namespace einode {

struct SolverConfig {
  double abs_tol = 1e-6;
  double rel_tol = 1e-6;
  double min_step = 1e-8;
  double max_step = std::numeric_limits<double>::infinity();
  /// 0 selects the automatic starting step.
  double initial_step = 0.0;
  /// Step attempts (accepted + rejected) before BudgetError.
  std::size_t max_steps = 100000;
  /// > 0 switches to fixed-step operation without error control.
  double fixed_step = 0.0;

  void validate() const;
};

struct OdeSolution {
  std::vector<double> times;
  std::vector<std::vector<double>> states;
  /// Per save point, state_dim × parameter_count. Empty without sensitivities.
  std::vector<RealMatrix> sensitivities;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;
  std::size_t rhs_evaluations = 0;
};

/// Throws SolvabilityError on step-size underflow (with the time and the largest real part of
/// the system eigenvalues there) and BudgetError when max_steps is exhausted.
OdeSolution solve(OdeSystem& system, std::span<const double> x0, std::pair<double, double> t_span,
                  std::span<const double> save_at, const SolverConfig& cfg,
                  bool with_sensitivities);

/// Number of sensitivity-carrying solves started on the calling thread.
std::size_t sensitivity_solve_count() noexcept;

/// Largest Re λ of the system matrix at x; NaN if it cannot be evaluated.
double max_real_eigenvalue(OdeSystem& system, std::span<const double> x);

/// ẋ = [v, (−c·s − d·v)/m]
class LinearOscillator final : public OdeSystem {
 public:
  LinearOscillator(double c, double d, double m);

  std::size_t state_dim() const override { return 2; }
  std::size_t parameter_count() const override { return 0; }
  void rhs(std::span<const double> x, std::span<double> dx) override;
  void rhs_with_jacobians(std::span<const double> x, std::span<double> dx,
                          std::span<double> state_jacobian,
                          std::span<double> param_jacobian) override;
  RealMatrix system_matrix(std::span<const double> x) override;

 private:
  double c_, d_, m_;
};

/// ν̈ = μ·(1 − ν²)·ν̇ − ν as a first-order system in (ν, ν̇).
class VanDerPol final : public OdeSystem {
 public:
  explicit VanDerPol(double mu);

  std::size_t state_dim() const override { return 2; }
  std::size_t parameter_count() const override { return 0; }
  void rhs(std::span<const double> x, std::span<double> dx) override;
  void rhs_with_jacobians(std::span<const double> x, std::span<double> dx,
                          std::span<double> state_jacobian,
                          std::span<double> param_jacobian) override;
  RealMatrix system_matrix(std::span<const double> x) override;

 private:
  double mu_;
};

/// Primal-only solve of a reference system.
OdeSolution ground_truth_solve(OdeSystem& system, std::span<const double> x0,
                               std::pair<double, double> t_span, std::span<const double> save_at,
                               const SolverConfig& cfg);

}  // namespace einode
