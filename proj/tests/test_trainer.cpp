#include <doctest.h>

#include <cmath>
#include <limits>

#include "einode/trainer.hpp"

using namespace einode;

namespace {

TrainingProblem small_problem() {
  TrainingProblem p;
  p.layers = single_hidden_layout(8);
  p.t_span = {0.0, 3.0};
  LinearOscillator osc(25.0, 0.05, 1.0);
  for (int k = 0; k <= 30; ++k) p.data.times.push_back(0.1 * k);
  SolverConfig tight;
  tight.abs_tol = tight.rel_tol = 1e-10;
  p.data.states = ground_truth_solve(osc, p.x0, p.t_span, p.data.times, tight).states;
  return p;
}

LossSpec full_spec() {
  LossSpec s = LossSpec::from_names("SOL+STB+OSC+FRQ+DMP+STF");
  s.frequency.constant = 0.795764;
  s.damping.constant = 0.005;
  s.stiffness.constant = 1.0;
  return s;
}

}  // namespace

TEST_CASE("Adam update matches the textbook recursion") {
  AdamConfig cfg;
  cfg.learning_rate = 0.1;
  AdamState state(2, cfg);
  std::vector<double> p{1.0, -1.0};
  double m0 = 0, v0 = 0, x0 = 1.0;
  for (int t = 1; t <= 3; ++t) {
    const std::vector<double> g{2.0 * p[0], 0.5};
    const double gx = 2.0 * x0;
    REQUIRE(adam_step(state, p, g));
    m0 = 0.9 * m0 + 0.1 * gx;
    v0 = 0.999 * v0 + 0.001 * gx * gx;
    const double mh = m0 / (1 - std::pow(0.9, t)), vh = v0 / (1 - std::pow(0.999, t));
    x0 -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
    CHECK(p[0] == doctest::Approx(x0).epsilon(1e-14));
  }
  CHECK(state.step() == 3);
  // The first step moves every coordinate by the learning rate.
  CHECK(p[1] == doctest::Approx(-1.0 - 0.3).epsilon(1e-6));
}

TEST_CASE("Adam rejects non-finite gradients without side effects") {
  AdamState state(2);
  std::vector<double> p{1.0, 2.0};
  const std::vector<double> bad{std::numeric_limits<double>::quiet_NaN(), 1.0};
  CHECK_FALSE(adam_step(state, p, bad));
  CHECK(p == std::vector<double>{1.0, 2.0});
  CHECK(state.step() == 0);
  CHECK(state.first_moment() == std::vector<double>{0.0, 0.0});
  std::vector<double> wrong(3);
  CHECK_THROWS_AS(adam_step(state, p, wrong), DimensionError);
  AdamConfig cfg;
  cfg.beta1 = 1.0;
  CHECK_THROWS_AS(AdamState(2, cfg), ConfigError);
}

TEST_CASE("gradient strategies") {
  for (const char* n : {"sequential", "merge_sum", "merge_average", "merge_switch", "extend_loss_sum"})
    CHECK(GradientStrategy::parse(n).name() == n);
  CHECK_THROWS_AS(GradientStrategy::parse("bogus"), ConfigError);

  const RealMatrix rows{{1, 2}, {3, -4}, {0, 1}};
  CHECK(combine_rows(rows, StrategyMode::sequential).size() == 3);
  CHECK(combine_rows(rows, StrategyMode::merge_sum) == std::vector<std::vector<double>>{{4, -1}});
  const auto avg = combine_rows(rows, StrategyMode::merge_average);
  CHECK(avg[0][0] == doctest::Approx(4.0 / 3));
  CHECK(combine_rows(rows, StrategyMode::merge_switch) == std::vector<std::vector<double>>{{3, -4}});
  CHECK(combine_rows(rows, StrategyMode::extend_loss_sum) ==
        combine_rows(rows, StrategyMode::merge_sum));
}

TEST_CASE("one sensitivity solve per step for any number of losses") {
  const TrainingProblem problem = small_problem();
  for (const std::string names : {"SOL", "SOL+FRQ+DMP", "SOL+STB+OSC+FRQ+DMP+STF"}) {
    LossSpec spec = full_spec();
    spec.active = LossSpec::from_names(names).active;
    TrainOptions opt;
    opt.steps = 3;
    opt.seed = 1;
    const TrainResult r = train(problem, spec, GradientStrategy{}, opt);
    for (const auto& s : r.log.steps) {
      CHECK(s.sensitivity_solves == 1);
      CHECK(s.optimizer_updates == spec.active.size());
    }
  }
}

TEST_CASE("sequential applies one update per row, merged modes one per step") {
  const TrainingProblem problem = small_problem();
  TrainOptions opt;
  opt.steps = 2;
  opt.seed = 2;
  std::size_t rows_seen = 0;
  opt.on_rows = [&](std::size_t, const RealMatrix& rows) { rows_seen = rows.rows(); };
  const TrainResult r = train(problem, full_spec(), GradientStrategy{StrategyMode::merge_sum}, opt);
  CHECK(rows_seen == 6);
  CHECK(r.log.steps.back().optimizer_updates == 1);
}

TEST_CASE("scaled rows are the jacobian rows times the scalings") {
  const TrainingProblem problem = small_problem();
  HybridRhs rhs(glorot_init(4, problem.layers));
  LossSpec spec = full_spec();
  spec.scalings = {2.0, 3.0, 4.0, 5.0, 6.0, 7.0};
  const StepEvaluation ev = evaluate_training_step(rhs, problem, spec);
  for (std::size_t r = 0; r < 6; ++r)
    for (std::size_t c = 0; c < ev.scaled_rows.cols(); ++c)
      CHECK(ev.scaled_rows(r, c) == ev.losses.jacobian(r, c) * spec.scalings[r]);
  CHECK(ev.lambda_w == ev.losses.trajectory.max_real());
}

TEST_CASE("training reduces the solution loss and is deterministic") {
  const TrainingProblem problem = small_problem();
  LossSpec spec = LossSpec::from_names("SOL");
  TrainOptions opt;
  opt.steps = 60;
  opt.seed = 3;
  opt.adam.learning_rate = 5e-3;
  const TrainResult a = train(problem, spec, GradientStrategy{}, opt);
  const TrainResult b = train(problem, spec, GradientStrategy{}, opt);
  CHECK(a.log.steps.back().losses[0] < a.log.steps.front().losses[0]);
  CHECK(std::equal(a.network.parameters().begin(), a.network.parameters().end(),
                   b.network.parameters().begin()));
  for (std::size_t i = 0; i < a.log.steps.size(); ++i)
    CHECK(a.log.steps[i].losses == b.log.steps[i].losses);
}

TEST_CASE("explicit initial parameters override the seed") {
  const TrainingProblem problem = small_problem();
  TrainOptions opt;
  opt.steps = 1;
  opt.seed = 99;
  opt.initial = glorot_init(5, problem.layers);
  TrainOptions ref = opt;
  ref.initial.reset();
  ref.seed = 5;
  const TrainResult a = train(problem, LossSpec::from_names("SOL"), GradientStrategy{}, opt);
  const TrainResult b = train(problem, LossSpec::from_names("SOL"), GradientStrategy{}, ref);
  CHECK(std::equal(a.network.parameters().begin(), a.network.parameters().end(),
                   b.network.parameters().begin()));
}

TEST_CASE("failed steps are isolated and repeated failures abort") {
  TrainingProblem problem = small_problem();
  problem.solver.max_steps = 2;  // every solve exhausts its budget
  TrainOptions opt;
  opt.steps = 20;
  opt.seed = 1;
  opt.max_consecutive_failures = 5;
  const TrainResult r = train(problem, LossSpec::from_names("SOL"), GradientStrategy{}, opt);
  CHECK(r.log.aborted);
  CHECK(r.log.failed_steps == 5);
  CHECK(r.log.steps.size() == 5);
  CHECK(std::isnan(r.log.steps[0].losses[0]));
  CHECK(r.log.steps[0].optimizer_updates == 0);
  const DenseNetwork init = glorot_init(1, problem.layers);
  CHECK(std::equal(r.network.parameters().begin(), r.network.parameters().end(),
                   init.parameters().begin()));
}

TEST_CASE("invalid training setups") {
  const TrainingProblem problem = small_problem();
  TrainOptions opt;
  opt.steps = 0;
  CHECK_THROWS_AS(train(problem, LossSpec::from_names("SOL"), GradientStrategy{}, opt), ConfigError);
  opt.steps = 1;
  CHECK_THROWS_AS(train(problem, LossSpec::from_names("SOL+FRQ"), GradientStrategy{}, opt),
                  ConfigError);
}
