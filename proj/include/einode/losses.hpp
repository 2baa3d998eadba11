#pragma once

// Solution loss and eigenvalue property losses over a solved trajectory.
//
// Every eigen loss is a mean over the evaluated instants of a per-instant sum.
// The deviation ε(a, b) is |a − b| by default ((a − b)² optionally); the
// subgradient of |·| at zero residual is taken as 0.

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "einode/eigen.hpp"
#include "einode/matrix.hpp"
#include "einode/network.hpp"
#include "einode/ode.hpp"

namespace einode {

/// Canonical order; also the order of sequential gradient application.
enum class LossKind : std::size_t { sol = 0, stb, osc, frq, dmp, stf };
inline constexpr std::size_t kLossKindCount = 6;
inline constexpr std::array<LossKind, kLossKindCount> kAllLossKinds = {
    LossKind::sol, LossKind::stb, LossKind::osc, LossKind::frq, LossKind::dmp, LossKind::stf};

const char* loss_name(LossKind kind) noexcept;
/// Accepts "SOL", "stb", ...; throws ConfigError otherwise.
LossKind parse_loss_kind(const std::string& name);

enum class ErrorMetric { absolute, squared };

/// FRQ/DMP comparison: each pair member against the target, or the two members against each other.
enum class PairMetric { target, pairwise };

using PairSet = std::vector<std::pair<std::size_t, std::size_t>>;

/// Constant target, optionally overridden per evaluated instant.
struct TargetSeries {
  std::optional<double> constant;
  std::vector<double> per_instant;

  bool defined() const noexcept { return constant.has_value() || !per_instant.empty(); }
  double at(std::size_t instant) const;
};

struct LossSpec {
  std::vector<LossKind> active;  // canonical order, no duplicates
  TargetSeries frequency;        // Hz
  TargetSeries damping;
  TargetSeries stiffness;
  std::optional<std::pair<double, double>> stiffness_corridor;
  std::array<double, kLossKindCount> scalings = {1.0, 1e3, 10.0, 10.0, 1.0, 0.1};
  ErrorMetric metric = ErrorMetric::absolute;
  PairMetric pair_metric = PairMetric::target;
  /// Evaluate eigenvalues on every stride-th save point.
  std::size_t eigen_stride = 1;
  /// Explicit pairs; empty selects (0,1) for two states or pair_count greedy pairs otherwise.
  PairSet pairs;
  std::size_t pair_count = 0;

  /// "SOL+FRQ+DMP" style names; scalings and targets keep their defaults.
  static LossSpec from_names(const std::string& names);
  std::string name() const;
  bool has(LossKind kind) const noexcept;
  bool needs_eigen() const noexcept;
  double scaling(LossKind kind) const noexcept { return scalings[static_cast<std::size_t>(kind)]; }
  void validate() const;
};

struct ReferenceData {
  std::vector<double> times;
  std::vector<std::vector<double>> states;
};

struct EigenInstant {
  double time = 0.0;
  std::vector<Complex> values;  // tracked order
  ComplexMatrix vectors;        // columns follow `values`
  RealMatrix system_matrix;
  bool degenerate = false;
  /// ∂λ/∂θ = dlambda_dbasis · gradient_basis, kept factored: the basis rows are the non-zero
  /// rows of ∂A/∂θ followed by the n rows of ∂x/∂θ, and dlambda_dbasis holds Re λ_i in row 2i
  /// and Im λ_i in row 2i+1. Both are empty when gradients were not requested or were skipped.
  RealMatrix dlambda_dbasis;
  RealMatrix gradient_basis;

  bool has_gradient() const noexcept { return dlambda_dbasis.size() != 0; }
  /// The expanded 2n × P product.
  RealMatrix dlambda_dtheta() const;
};

struct EigenTrajectory {
  std::vector<EigenInstant> instants;
  std::size_t degenerate_instants = 0;
  /// Instants whose eigenvalue gradient was dropped (singular U or non-finite result).
  std::size_t skipped_gradients = 0;

  std::vector<double> times() const;
  /// Largest Re λ over all instants (the λ_w metric); NaN if empty.
  double max_real() const;
};

/// perm[k][i] is the raw index at instant k of tracked eigenvalue i. The first instant keeps
/// the incoming order; later instants minimise the total distance to the previous instant
/// (exhaustive for n ≤ 8, greedy beyond; ties go to the lower index).
std::vector<std::vector<std::size_t>> track_eigenvalues(
    const std::vector<std::vector<Complex>>& raw);

/// Reorders the instants in place according to track_eigenvalues.
void apply_tracking(std::vector<EigenInstant>& instants);

/// (0,1) for two eigenvalues; otherwise `count` pairs chosen greedily by real-part proximity.
PairSet build_pairs(const std::vector<Complex>& values, std::size_t count);

/// Eigen data at every stride-th save point, tracked. With gradients, ∂λ/∂θ chains the
/// system matrix derivatives through the solution sensitivities.
EigenTrajectory eigen_trajectory(HybridRhs& rhs, const OdeSolution& sol, std::size_t stride,
                                 bool with_gradients);

/// Tracked eigen data for a fixed list of matrices (no gradients).
EigenTrajectory eigen_trajectory(const std::vector<double>& times,
                                 const std::vector<RealMatrix>& matrices);

double loss_sol(const OdeSolution& sol, const ReferenceData& data,
                ErrorMetric metric = ErrorMetric::absolute);
double loss_stb(const EigenTrajectory& traj, ErrorMetric metric = ErrorMetric::absolute);
double loss_osc(const EigenTrajectory& traj, const PairSet& pairs,
                ErrorMetric metric = ErrorMetric::absolute);
double loss_frq(const EigenTrajectory& traj, const PairSet& pairs, const TargetSeries& target,
                ErrorMetric metric = ErrorMetric::absolute, PairMetric pm = PairMetric::target);
double loss_dmp(const EigenTrajectory& traj, const PairSet& pairs, const TargetSeries& target,
                ErrorMetric metric = ErrorMetric::absolute, PairMetric pm = PairMetric::target);
double loss_stf(const EigenTrajectory& traj, const TargetSeries& target,
                ErrorMetric metric = ErrorMetric::absolute,
                std::optional<std::pair<double, double>> corridor = std::nullopt);

struct LossEvaluation {
  std::vector<LossKind> kinds;
  std::vector<double> values;
  RealMatrix jacobian;  // one row per entry of kinds, unscaled
  EigenTrajectory trajectory;
};

/// Loss vector and its parameter jacobian from one sensitivity-carrying solution.
LossEvaluation loss_vector_and_jacobian(HybridRhs& rhs, const OdeSolution& sol,
                                        const LossSpec& spec, const ReferenceData& data);

/// Loss vector only (no sensitivities needed); used by finite-difference checks.
std::vector<double> loss_vector(HybridRhs& rhs, const OdeSolution& sol, const LossSpec& spec,
                                const ReferenceData& data);

}  // namespace einode
