#pragma once

// Adam training of the NeuralODE parameters against a loss vector, with the
// gradient rows combined by one of several strategies.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "einode/losses.hpp"
#include "einode/network.hpp"
#include "einode/ode.hpp"

namespace einode {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class AdamState {
 public:
  AdamState() = default;
  AdamState(std::size_t parameter_count, AdamConfig config = {});

  std::size_t step() const noexcept { return step_; }
  const std::vector<double>& first_moment() const noexcept { return m_; }
  const std::vector<double>& second_moment() const noexcept { return v_; }
  const AdamConfig& config() const noexcept { return config_; }

 private:
  friend bool adam_step(AdamState&, std::span<double>, std::span<const double>);
  AdamConfig config_;
  std::size_t step_ = 0;
  std::vector<double> m_, v_;
};

/// Bias-corrected Adam update in place. A non-finite gradient leaves parameters and moments
/// untouched and returns false.
bool adam_step(AdamState& state, std::span<double> params, std::span<const double> gradient);

enum class StrategyMode { sequential, merge_sum, merge_average, merge_switch, extend_loss_sum };

struct GradientStrategy {
  StrategyMode mode = StrategyMode::sequential;

  /// "sequential", "merge_sum", "merge_average", "merge_switch", "extend_loss_sum".
  static GradientStrategy parse(const std::string& name);
  std::string name() const;
};

/// Everything that defines the fitting problem apart from the losses.
struct TrainingProblem {
  std::vector<LayerShape> layers = reference_layout();
  RhsAssembly assembly = RhsAssembly::hybrid_second_order;
  std::vector<double> x0 = {1.0, 0.0};
  std::pair<double, double> t_span = {0.0, 10.0};
  ReferenceData data;  // sampled reference; its times are the save points
  SolverConfig solver;
};

struct StepRecord {
  std::size_t step = 0;
  bool failed = false;
  std::string failure;
  std::vector<double> losses;  // unscaled, per active loss; NaN on failed steps
  double lambda_w = 0.0;       // max over save points of max Re λ
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;
  std::size_t sensitivity_solves = 0;
  std::size_t optimizer_updates = 0;
  std::size_t degenerate_instants = 0;
  std::size_t skipped_gradients = 0;
  std::size_t zeroed_rows = 0;
  double millis = 0.0;
};

struct TrainingLog {
  std::vector<LossKind> kinds;
  std::vector<StepRecord> steps;
  std::size_t failed_steps = 0;
  bool aborted = false;
  std::string abort_reason;
};

struct TrainOptions {
  std::size_t steps = 1000;
  std::uint64_t seed = 0;
  /// Starting parameters; Glorot from `seed` when empty.
  std::optional<DenseNetwork> initial;
  AdamConfig adam;
  std::size_t max_consecutive_failures = 50;
  /// Sees every step's scaled gradient rows before they are combined.
  std::function<void(std::size_t step, const RealMatrix& scaled_rows)> on_rows;
  std::function<void(const StepRecord&, const DenseNetwork&)> on_step;
};

/// One training step up to (excluding) the optimizer: a sensitivity-carrying solve, the loss
/// vector and jacobian, λ_w telemetry, non-finite row zeroing and gradient scaling.
struct StepEvaluation {
  LossEvaluation losses;
  RealMatrix scaled_rows;
  double lambda_w = 0.0;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;
  std::size_t zeroed_rows = 0;
};

StepEvaluation evaluate_training_step(HybridRhs& rhs, const TrainingProblem& problem,
                                      const LossSpec& spec);

struct TrainResult {
  DenseNetwork network;
  TrainingLog log;
};

TrainResult train(const TrainingProblem& problem, const LossSpec& spec,
                  const GradientStrategy& strategy, const TrainOptions& options);

/// Row combination used by the merge and extend modes (sequential returns the rows unchanged).
std::vector<std::vector<double>> combine_rows(const RealMatrix& scaled_rows, StrategyMode mode);

}  // namespace einode
