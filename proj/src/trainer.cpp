#include "einode/trainer.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "einode/log.hpp"
#include "einode/simd/kernels.hpp"

namespace einode {

AdamState::AdamState(std::size_t parameter_count, AdamConfig config)
    : config_(config), m_(parameter_count, 0.0), v_(parameter_count, 0.0) {
  if (!(config.beta1 > 0.0 && config.beta1 < 1.0) || !(config.beta2 > 0.0 && config.beta2 < 1.0))
    throw ConfigError("adam: betas must lie in (0, 1)");
  if (!(config.learning_rate > 0.0) || !(config.epsilon > 0.0))
    throw ConfigError("adam: learning rate and epsilon must be positive");
}

bool adam_step(AdamState& state, std::span<double> params, std::span<const double> gradient) {
  if (params.size() != state.m_.size() || gradient.size() != params.size())
    throw DimensionError("adam_step: size mismatch");
  for (double g : gradient)
    if (!std::isfinite(g)) return false;
  ++state.step_;
  const auto& c = state.config_;
  const double t = static_cast<double>(state.step_);
  const simd::AdamCoefficients coeff{c.beta1,          c.beta2,
                                     c.learning_rate,  c.epsilon,
                                     1.0 - std::pow(c.beta1, t), 1.0 - std::pow(c.beta2, t)};
  simd::adam_update(params, state.m_, state.v_, gradient, coeff);
  return true;
}

GradientStrategy GradientStrategy::parse(const std::string& name) {
  if (name == "sequential") return {StrategyMode::sequential};
  if (name == "merge_sum" || name == "merge(sum)") return {StrategyMode::merge_sum};
  if (name == "merge_average" || name == "merge(average)") return {StrategyMode::merge_average};
  if (name == "merge_switch" || name == "merge(switch)") return {StrategyMode::merge_switch};
  if (name == "extend_loss_sum") return {StrategyMode::extend_loss_sum};
  throw ConfigError("unknown gradient strategy '" + name + "'");
}

std::string GradientStrategy::name() const {
  switch (mode) {
    case StrategyMode::sequential: return "sequential";
    case StrategyMode::merge_sum: return "merge_sum";
    case StrategyMode::merge_average: return "merge_average";
    case StrategyMode::merge_switch: return "merge_switch";
    case StrategyMode::extend_loss_sum: return "extend_loss_sum";
  }
  return "?";
}

std::vector<std::vector<double>> combine_rows(const RealMatrix& rows, StrategyMode mode) {
  const std::size_t r = rows.rows();
  const std::size_t p = rows.cols();
  std::vector<std::vector<double>> out;
  if (mode == StrategyMode::sequential) {
    for (std::size_t i = 0; i < r; ++i) out.emplace_back(rows.row(i).begin(), rows.row(i).end());
    return out;
  }
  std::vector<double> g(p, 0.0);
  if (mode == StrategyMode::merge_switch) {
    // The row with the largest 2-norm wins; ties go to the earlier row.
    std::size_t best = 0;
    double best_norm = -1.0;
    for (std::size_t i = 0; i < r; ++i) {
      const double nrm = simd::dot(rows.row(i), rows.row(i));
      if (nrm > best_norm) {
        best_norm = nrm;
        best = i;
      }
    }
    if (r > 0) std::copy(rows.row(best).begin(), rows.row(best).end(), g.begin());
  } else {
    // The weighted-sum objective has the summed rows as its gradient.
    for (std::size_t i = 0; i < r; ++i) simd::axpy(1.0, rows.row(i), g);
    if (mode == StrategyMode::merge_average && r > 0) simd::scal(1.0 / static_cast<double>(r), g);
  }
  out.push_back(std::move(g));
  return out;
}

StepEvaluation evaluate_training_step(HybridRhs& rhs, const TrainingProblem& problem,
                                      const LossSpec& spec) {
  StepEvaluation ev;
  const OdeSolution sol = solve(rhs, problem.x0, problem.t_span, problem.data.times, problem.solver, true);
  ev.accepted_steps = sol.accepted_steps;
  ev.rejected_steps = sol.rejected_steps;
  ev.losses = loss_vector_and_jacobian(rhs, sol, spec, problem.data);
  if (spec.needs_eigen() && spec.eigen_stride == 1)
    ev.lambda_w = ev.losses.trajectory.max_real();
  else
    ev.lambda_w = eigen_trajectory(rhs, sol, 1, false).max_real();
  ev.scaled_rows = ev.losses.jacobian;
  for (std::size_t r = 0; r < ev.scaled_rows.rows(); ++r) {
    auto row = ev.scaled_rows.row(r);
    bool finite = true;
    for (double v : row) finite = finite && std::isfinite(v);
    if (!finite) {
      std::fill(row.begin(), row.end(), 0.0);
      ++ev.zeroed_rows;
      continue;
    }
    simd::scal(spec.scaling(ev.losses.kinds[r]), row);
  }
  return ev;
}

TrainResult train(const TrainingProblem& problem, const LossSpec& spec,
                  const GradientStrategy& strategy, const TrainOptions& options) {
  spec.validate();
  problem.solver.validate();
  if (options.steps == 0) throw ConfigError("train: steps must be >= 1");

  DenseNetwork initial = options.initial ? *options.initial : glorot_init(options.seed, problem.layers);
  HybridRhs rhs(std::move(initial), problem.assembly);
  const std::size_t p = rhs.parameter_count();
  std::vector<double> params(rhs.network().parameters().begin(), rhs.network().parameters().end());
  AdamState adam(p, options.adam);

  TrainingLog log;
  log.kinds = spec.active;
  std::size_t consecutive_failures = 0;
  bool warned_degenerate = false;
  bool warned_rows = false;
  std::size_t total_skipped = 0;

  for (std::size_t step = 1; step <= options.steps; ++step) {
    const auto start = std::chrono::steady_clock::now();
    StepRecord rec;
    rec.step = step;
    const std::size_t solves_before = sensitivity_solve_count();
    try {
      StepEvaluation ev = evaluate_training_step(rhs, problem, spec);
      rec.accepted_steps = ev.accepted_steps;
      rec.rejected_steps = ev.rejected_steps;
      rec.losses = ev.losses.values;
      rec.lambda_w = ev.lambda_w;
      rec.degenerate_instants = ev.losses.trajectory.degenerate_instants;
      rec.skipped_gradients = ev.losses.trajectory.skipped_gradients;
      rec.zeroed_rows = ev.zeroed_rows;
      total_skipped += rec.skipped_gradients;
      if (rec.skipped_gradients > 0 && !warned_degenerate) {
        log_warning("step " + std::to_string(step) + ": eigenvalue gradient skipped at " +
                    std::to_string(rec.skipped_gradients) +
                    " degenerate instant(s); further occurrences are only counted");
        warned_degenerate = true;
      }
      if (rec.zeroed_rows > 0 && !warned_rows) {
        log_warning("step " + std::to_string(step) + ": non-finite gradient row(s) zeroed");
        warned_rows = true;
      }
      const RealMatrix& rows = ev.scaled_rows;
      if (options.on_rows) options.on_rows(step, rows);

      for (const auto& g : combine_rows(rows, strategy.mode))
        if (adam_step(adam, params, g)) ++rec.optimizer_updates;
      rhs.set_parameters(params);
      consecutive_failures = 0;
    } catch (const Error& e) {
      // Nothing was applied to the optimizer or parameters for this step.
      rec.failed = true;
      rec.failure = e.what();
      rec.losses.assign(spec.active.size(), std::numeric_limits<double>::quiet_NaN());
      rec.lambda_w = std::numeric_limits<double>::quiet_NaN();
      if (const auto* se = dynamic_cast<const SolvabilityError*>(&e)) rec.lambda_w = se->max_real_eigenvalue();
      ++log.failed_steps;
      ++consecutive_failures;
      log_warning("step " + std::to_string(step) + " failed: " + rec.failure);
    }
    rec.sensitivity_solves = sensitivity_solve_count() - solves_before;
    rec.millis =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    log.steps.push_back(rec);
    if (options.on_step) options.on_step(log.steps.back(), rhs.network());
    if (consecutive_failures >= options.max_consecutive_failures) {
      log.aborted = true;
      log.abort_reason = std::to_string(consecutive_failures) +
                         " consecutive failed steps; last: " + rec.failure;
      log_warning("training aborted: " + log.abort_reason);
      break;
    }
  }
  if (total_skipped > 0)
    log_info("eigenvalue gradients skipped at " + std::to_string(total_skipped) + " instant(s) in total");
  return {rhs.network(), std::move(log)};
}

}  // namespace einode
