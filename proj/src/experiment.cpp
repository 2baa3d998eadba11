#include "einode/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <thread>

#include <json.hpp>

#include "einode/eigen.hpp"
#include "einode/log.hpp"
#include "einode/svg.hpp"

namespace einode {
namespace {

namespace fs = std::filesystem;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

double undamped_frequency(const ExperimentConfig& c) {
  return std::sqrt(c.c / c.m) / (2.0 * std::numbers::pi);
}

SampleGrid read_grid(const ConfigDocument& doc, const std::string& table, const std::string& rate_key,
                     const std::string& interval_key, SampleGrid fallback) {
  const ConfigValue* rate = doc.find(table, rate_key);
  const ConfigValue* interval = doc.find(table, interval_key);
  if (rate && interval)
    doc.fail(*interval, "give either " + table + "." + rate_key + " or " + table + "." +
                            interval_key + ", not both");
  if (rate) return {doc.number(table, rate_key, 0.0), 0.0};
  if (interval) return {0.0, doc.number(table, interval_key, 0.0)};
  return fallback;
}

std::optional<double> read_target(const ConfigDocument& doc, const std::string& key) {
  const ConfigValue* v = doc.find("losses", key);
  if (!v) return std::nullopt;
  if (v->type == ConfigValue::Type::string) {
    if (v->text == "auto") return std::nullopt;
    doc.fail(*v, "'losses." + key + "' must be a number or \"auto\"");
  }
  return doc.number("losses", key, 0.0);
}

struct FinalEvaluation {
  double l_sol = kNaN;
  double validation_l_sol = kNaN;
  double lambda_w = kNaN;
  std::optional<OdeSolution> train_solution;
  std::optional<OdeSolution> validation_solution;
  EigenTrajectory eigen;
};

FinalEvaluation evaluate_final(const ExperimentConfig& config, const ScenarioData& data,
                               const DenseNetwork& network) {
  FinalEvaluation out;
  HybridRhs rhs(network);
  try {
    out.train_solution = solve(rhs, config.x0, data.t_span, data.train.times, config.solver, false);
    out.l_sol = loss_sol(*out.train_solution, data.train, config.metric);
    out.eigen = eigen_trajectory(rhs, *out.train_solution, 1, false);
    out.lambda_w = out.eigen.max_real();
  } catch (const Error& e) {
    log_warning("final network: training-grid solve failed: " + std::string(e.what()));
  }
  try {
    out.validation_solution =
        solve(rhs, config.x0, data.t_span, data.validation.times, config.solver, false);
    out.validation_l_sol = loss_sol(*out.validation_solution, data.validation, config.metric);
  } catch (const Error& e) {
    log_warning("final network: validation solve failed: " + std::string(e.what()));
  }
  return out;
}

std::string run_label(const std::string& configuration, std::uint64_t seed) {
  return configuration + " seed " + std::to_string(seed);
}

std::vector<double> loss_series(const TrainingLog& log, LossKind kind) {
  std::vector<double> out;
  const auto it = std::find(log.kinds.begin(), log.kinds.end(), kind);
  if (it == log.kinds.end()) return out;
  const auto col = static_cast<std::size_t>(it - log.kinds.begin());
  for (const auto& s : log.steps) out.push_back(s.losses.empty() ? kNaN : s.losses[col]);
  return out;
}

std::vector<double> step_axis(const TrainingLog& log) {
  std::vector<double> out;
  for (const auto& s : log.steps) out.push_back(static_cast<double>(s.step));
  return out;
}

std::vector<double> lambda_series(const TrainingLog& log) {
  std::vector<double> out;
  for (const auto& s : log.steps) out.push_back(s.lambda_w);
  return out;
}

std::vector<double> first_state(const std::vector<std::vector<double>>& states) {
  std::vector<double> out;
  for (const auto& x : states) out.push_back(x.at(0));
  return out;
}

std::vector<PlotPanel> comparison_panels(const ScenarioData& data,
                                         const std::vector<const RunResult*>& runs,
                                         const std::vector<std::vector<double>>& model_x1) {
  PlotPanel solution{"Solution x1 (validation grid)", "t [s]", "x1", false, kNaN, {}};
  solution.series.push_back({"ground truth", data.validation.times, first_state(data.validation.states), true});
  PlotPanel convergence{"Solution loss l_SOL", "step", "l_SOL", true, kNaN, {}};
  PlotPanel stability{"Most unstable eigenvalue Re(lambda_w)", "step", "max Re", false, 0.0, {}};
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const RunResult& r = *runs[i];
    const std::string label = run_label(r.configuration, r.seed);
    solution.series.push_back({label, data.validation.times, model_x1[i], false});
    convergence.series.push_back({label, step_axis(r.log), loss_series(r.log, LossKind::sol), false});
    stability.series.push_back({label, step_axis(r.log), lambda_series(r.log), false});
  }
  return {solution, convergence, stability};
}

std::vector<double> model_first_state(const FinalEvaluation& ev, std::size_t count) {
  if (!ev.validation_solution) return std::vector<double>(count, kNaN);
  return first_state(ev.validation_solution->states);
}

void write_run_outputs(const ScenarioData& data, const RunResult& run, const FinalEvaluation& ev) {
  const fs::path dir = run.directory;
  write_csv((dir / "training_log.csv").string(), training_log_table(run.log));

  NumericTable timing{{"step", "millis"}, {}};
  for (const auto& s : run.log.steps) timing.rows.push_back({static_cast<double>(s.step), s.millis});
  write_csv((dir / "timing.csv").string(), timing);

  NumericTable traj{{"t", "x1", "x2", "x1_ref", "x2_ref"}, {}};
  for (std::size_t i = 0; i < data.validation.times.size(); ++i) {
    const auto& ref = data.validation.states[i];
    double x1 = kNaN, x2 = kNaN;
    if (ev.validation_solution) {
      x1 = ev.validation_solution->states[i][0];
      x2 = ev.validation_solution->states[i][1];
    }
    traj.rows.push_back({data.validation.times[i], x1, x2, ref[0], ref[1]});
  }
  write_csv((dir / "trajectory.csv").string(), traj);

  NumericTable eig{{"t"}, {}};
  const std::size_t n = 2;
  for (std::size_t i = 0; i < n; ++i) {
    eig.header.push_back("re_" + std::to_string(i));
    eig.header.push_back("im_" + std::to_string(i));
  }
  for (const auto& inst : ev.eigen.instants) {
    std::vector<double> row{inst.time};
    for (const Complex& l : inst.values) {
      row.push_back(l.real());
      row.push_back(l.imag());
    }
    eig.rows.push_back(std::move(row));
  }
  write_csv((dir / "eigen_trajectory.csv").string(), eig);

  save_parameters((dir / "params.bin").string(), run.network);
  write_svg((dir / "summary.svg").string(),
            comparison_panels(data, {&run}, {model_first_state(ev, data.validation.times.size())}));
}

}  // namespace

const char* scenario_name(Scenario s) noexcept {
  switch (s) {
    case Scenario::oscillator: return "oscillator";
    case Scenario::nyquist: return "nyquist";
    case Scenario::vanderpol: return "vanderpol";
  }
  return "?";
}

Scenario parse_scenario(const std::string& name) {
  if (name == "oscillator") return Scenario::oscillator;
  if (name == "nyquist") return Scenario::nyquist;
  if (name == "vanderpol") return Scenario::vanderpol;
  throw ConfigError("unknown scenario '" + name + "' (expected oscillator, nyquist or vanderpol)");
}

std::vector<double> SampleGrid::times(double t_end) const {
  std::vector<double> out;
  const double h = spacing();
  if (!(h > 0.0)) throw ConfigError("sampling: spacing must be positive");
  const double limit = t_end * (1.0 + 1e-9) + 1e-12;
  for (std::size_t k = 0;; ++k) {
    const double t = rate > 0.0 ? static_cast<double>(k) / rate : static_cast<double>(k) * interval;
    if (t > limit) break;
    out.push_back(t);
  }
  return out;
}

void ExperimentConfig::validate() const {
  if (!finite_positive(horizon)) throw ConfigError("sampling: horizon must be > 0");
  if (!finite_positive(sampling.spacing())) throw ConfigError("sampling: interval must be > 0");
  if (!finite_positive(validation.spacing()))
    throw ConfigError("sampling: validation interval must be > 0");
  if (x0.size() != 2) throw ConfigError("sampling: initial_state needs two entries");
  for (double v : x0)
    if (!std::isfinite(v)) throw ConfigError("sampling: initial_state must be finite");
  if (scenario == Scenario::vanderpol) {
    if (!std::isfinite(mu) || mu < 0.0) throw ConfigError("system: mu must be finite and >= 0");
  } else {
    if (!finite_positive(m)) throw ConfigError("system: m must be > 0");
    if (!finite_positive(c)) throw ConfigError("system: c must be > 0");
    if (!std::isfinite(d) || d < 0.0) throw ConfigError("system: d must be finite and >= 0");
  }
  if (scenario == Scenario::nyquist) {
    const double dt_max = 1.0 / (2.0 * undamped_frequency(*this));
    if (!(sampling.spacing() > dt_max))
      throw ConfigError("nyquist: sample spacing " + std::to_string(sampling.spacing()) +
                        " s must exceed 1/(2 f_max) = " + std::to_string(dt_max) + " s");
  }
  if (configurations.empty()) throw ConfigError("training: no configurations");
  std::set<std::string> seen;
  for (const auto& name : configurations) {
    const LossSpec spec = LossSpec::from_names(name);
    if (!seen.insert(spec.name()).second)
      throw ConfigError("training: configuration '" + name + "' listed twice");
  }
  if (steps == 0) throw ConfigError("training: steps must be >= 1");
  if (seeds.empty()) throw ConfigError("training: no seeds");
  if (hidden == 0) throw ConfigError("training: hidden must be >= 1");
  if (max_consecutive_failures == 0) throw ConfigError("training: max_consecutive_failures must be >= 1");
  AdamState check(1, adam);
  (void)check;
  if (eigen_stride == 0) throw ConfigError("losses: eigen_stride must be >= 1");
  for (double s : scalings)
    if (!finite_positive(s)) throw ConfigError("scalings: every scaling must be > 0");
  solver.validate();
  if (!finite_positive(data_tolerance)) throw ConfigError("solver: data_tolerance must be > 0");
  if (output_dir.empty()) throw ConfigError("output: dir must not be empty");
}

ExperimentConfig parse_experiment_config(const ConfigDocument& doc) {
  ExperimentConfig c;
  c.name = doc.string("", "name", c.name);
  c.scenario = parse_scenario(doc.string("", "scenario", "oscillator"));
  if (c.scenario == Scenario::vanderpol) {
    c.sampling = {3.0, 0.0};
    c.horizon = 30.0;
  } else if (c.scenario == Scenario::nyquist) {
    c.sampling = {0.0, 0.75};
    c.c = 4.0 * std::numbers::pi * std::numbers::pi;
    c.d = 0.5;
  }

  c.c = doc.number("system", "c", c.c);
  c.d = doc.number("system", "d", c.d);
  c.m = doc.number("system", "m", c.m);
  c.mu = doc.number("system", "mu", c.mu);
  if (const ConfigValue* f = doc.find("system", "f_max")) {
    if (doc.find("system", "c")) doc.fail(*f, "give either system.c or system.f_max, not both");
    const double f_max = doc.number("system", "f_max", 0.0);
    if (!finite_positive(f_max)) doc.fail(*f, "system.f_max must be > 0");
    c.c = std::pow(2.0 * std::numbers::pi * f_max, 2) * c.m;
  }

  c.sampling = read_grid(doc, "sampling", "rate", "interval", c.sampling);
  c.horizon = doc.number("sampling", "horizon", c.horizon);
  c.x0 = doc.numbers("sampling", "initial_state", c.x0);
  c.validation = read_grid(doc, "sampling", "validation_rate", "validation_interval", c.validation);

  c.configurations = doc.strings("training", "configurations", c.configurations);
  c.steps = doc.integer("training", "steps", c.steps);
  if (const ConfigValue* seeds = doc.find("training", "seeds")) {
    c.seeds.clear();
    if (seeds->type != ConfigValue::Type::array) doc.fail(*seeds, "training.seeds must be an array");
    for (const auto& s : seeds->items) {
      if (s.type != ConfigValue::Type::number || s.number < 0.0 || s.number != std::floor(s.number))
        doc.fail(*seeds, "training.seeds must hold non-negative integers");
      c.seeds.push_back(static_cast<std::uint64_t>(s.number));
    }
  }
  c.strategy = GradientStrategy::parse(doc.string("training", "strategy", c.strategy.name()));
  c.adam.learning_rate = doc.number("training", "learning_rate", c.adam.learning_rate);
  c.adam.beta1 = doc.number("training", "beta1", c.adam.beta1);
  c.adam.beta2 = doc.number("training", "beta2", c.adam.beta2);
  c.adam.epsilon = doc.number("training", "epsilon", c.adam.epsilon);
  c.hidden = doc.integer("training", "hidden", c.hidden);
  c.max_consecutive_failures =
      doc.integer("training", "max_consecutive_failures", c.max_consecutive_failures);
  c.checkpoint_every = doc.integer("training", "checkpoint_every", c.checkpoint_every);

  const std::string metric = doc.string("losses", "metric", "absolute");
  if (metric == "absolute") c.metric = ErrorMetric::absolute;
  else if (metric == "squared") c.metric = ErrorMetric::squared;
  else throw ConfigError("losses.metric must be \"absolute\" or \"squared\"");
  const std::string pm = doc.string("losses", "pair_metric", "target");
  if (pm == "target") c.pair_metric = PairMetric::target;
  else if (pm == "pairwise") c.pair_metric = PairMetric::pairwise;
  else throw ConfigError("losses.pair_metric must be \"target\" or \"pairwise\"");
  c.frequency = read_target(doc, "frequency");
  c.damping = read_target(doc, "damping");
  c.stiffness = read_target(doc, "stiffness");
  if (const ConfigValue* v = doc.find("losses", "stiffness_corridor")) {
    const auto lohi = doc.numbers("losses", "stiffness_corridor", {});
    if (lohi.size() != 2) doc.fail(*v, "losses.stiffness_corridor needs [lo, hi]");
    c.stiffness_corridor = std::make_pair(lohi[0], lohi[1]);
  }
  c.eigen_stride = doc.integer("losses", "eigen_stride", c.eigen_stride);

  for (LossKind k : kAllLossKinds)
    c.scalings[static_cast<std::size_t>(k)] =
        doc.number("scalings", loss_name(k), c.scalings[static_cast<std::size_t>(k)]);

  c.solver.abs_tol = doc.number("solver", "abs_tol", c.solver.abs_tol);
  c.solver.rel_tol = doc.number("solver", "rel_tol", c.solver.rel_tol);
  c.solver.min_step = doc.number("solver", "min_step", c.solver.min_step);
  c.solver.max_step = doc.number("solver", "max_step", c.solver.max_step);
  c.solver.initial_step = doc.number("solver", "initial_step", c.solver.initial_step);
  c.solver.max_steps = doc.integer("solver", "max_steps", c.solver.max_steps);
  c.data_tolerance = doc.number("solver", "data_tolerance", c.data_tolerance);

  c.output_dir = doc.string("output", "dir", c.output_dir);

  doc.reject_unused();
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  return parse_experiment_config(ConfigDocument::load(path));
}

std::unique_ptr<OdeSystem> reference_system(const ExperimentConfig& config) {
  if (config.scenario == Scenario::vanderpol) return std::make_unique<VanDerPol>(config.mu);
  return std::make_unique<LinearOscillator>(config.c, config.d, config.m);
}

ScenarioData generate_data(const ExperimentConfig& config) {
  config.validate();
  auto system = reference_system(config);
  ScenarioData data;
  data.train.times = config.sampling.times(config.horizon);
  data.t_span = {0.0, data.train.times.back()};
  data.validation.times = config.validation.times(data.t_span.second);

  SolverConfig tight;
  tight.abs_tol = config.data_tolerance;
  tight.rel_tol = config.data_tolerance;
  tight.min_step = 1e-14;
  tight.max_steps = 10'000'000;
  data.train.states =
      ground_truth_solve(*system, config.x0, data.t_span, data.train.times, tight).states;
  data.validation.states =
      ground_truth_solve(*system, config.x0, data.t_span, data.validation.times, tight).states;

  double f = 0.0, dmp = 0.0, stf = 0.0;
  for (const auto& x : data.train.states) {
    const EigenResult eig = eigen(system->system_matrix(x));
    double fi = 0.0, di = 0.0;
    for (const Complex& l : eig.values) {
      fi += eigen_frequency(l);
      di += eigen_damping(l);
    }
    f += fi / static_cast<double>(eig.values.size());
    dmp += di / static_cast<double>(eig.values.size());
    stf += stiffness_ratio(eig.values);
  }
  const double count = static_cast<double>(data.train.states.size());
  data.mean_frequency = f / count;
  data.mean_damping = dmp / count;
  data.mean_stiffness = stf / count;
  return data;
}

LossSpec make_loss_spec(const ExperimentConfig& config, const std::string& configuration,
                        const ScenarioData& data) {
  LossSpec spec = LossSpec::from_names(configuration);
  spec.frequency.constant = config.frequency.value_or(data.mean_frequency);
  spec.damping.constant = config.damping.value_or(data.mean_damping);
  spec.stiffness.constant = std::max(1.0, config.stiffness.value_or(data.mean_stiffness));
  spec.stiffness_corridor = config.stiffness_corridor;
  spec.metric = config.metric;
  spec.pair_metric = config.pair_metric;
  spec.eigen_stride = config.eigen_stride;
  spec.scalings = config.scalings;
  spec.validate();
  return spec;
}

TrainingProblem make_training_problem(const ExperimentConfig& config, const ScenarioData& data) {
  TrainingProblem p;
  p.layers = single_hidden_layout(config.hidden);
  p.assembly = RhsAssembly::hybrid_second_order;
  p.x0 = config.x0;
  p.t_span = data.t_span;
  p.data = data.train;
  p.solver = config.solver;
  return p;
}

NumericTable training_log_table(const TrainingLog& log) {
  NumericTable t;
  t.header = {"step", "failed"};
  for (LossKind k : log.kinds) t.header.push_back(std::string("l_") + loss_name(k));
  for (const char* h : {"lambda_w_max", "accepted_steps", "rejected_steps", "sensitivity_solves",
                        "optimizer_updates", "degenerate_instants", "skipped_gradients",
                        "zeroed_rows"})
    t.header.push_back(h);
  for (const auto& s : log.steps) {
    std::vector<double> row{static_cast<double>(s.step), s.failed ? 1.0 : 0.0};
    for (std::size_t i = 0; i < log.kinds.size(); ++i)
      row.push_back(i < s.losses.size() ? s.losses[i] : kNaN);
    for (double v : {s.lambda_w, static_cast<double>(s.accepted_steps),
                     static_cast<double>(s.rejected_steps), static_cast<double>(s.sensitivity_solves),
                     static_cast<double>(s.optimizer_updates),
                     static_cast<double>(s.degenerate_instants),
                     static_cast<double>(s.skipped_gradients), static_cast<double>(s.zeroed_rows)})
      row.push_back(v);
    t.rows.push_back(std::move(row));
  }
  return t;
}

RunResult run_single(const ExperimentConfig& config, const ScenarioData& data,
                     const std::string& configuration, std::uint64_t seed,
                     const std::string& directory) {
  RunResult run;
  run.configuration = LossSpec::from_names(configuration).name();
  run.seed = seed;
  run.directory = directory;
  const auto start = std::chrono::steady_clock::now();
  try {
    const LossSpec spec = make_loss_spec(config, configuration, data);
    const TrainingProblem problem = make_training_problem(config, data);
    if (!directory.empty()) fs::create_directories(directory);
    TrainOptions options;
    options.steps = config.steps;
    options.seed = seed;
    options.adam = config.adam;
    options.max_consecutive_failures = config.max_consecutive_failures;
    if (!directory.empty() && config.checkpoint_every > 0) {
      fs::create_directories(fs::path(directory) / "checkpoints");
      options.on_step = [&](const StepRecord& rec, const DenseNetwork& net) {
        if (rec.step % config.checkpoint_every == 0)
          save_parameters((fs::path(directory) / "checkpoints" /
                           ("params_step_" + std::to_string(rec.step) + ".bin"))
                              .string(),
                          net);
      };
    }
    TrainResult trained = train(problem, spec, config.strategy, options);
    run.log = std::move(trained.log);
    run.network = std::move(trained.network);
    const FinalEvaluation ev = evaluate_final(config, data, run.network);
    run.final_l_sol = ev.l_sol;
    run.validation_l_sol = ev.validation_l_sol;
    run.final_lambda_w = ev.lambda_w;
    if (!directory.empty()) write_run_outputs(data, run, ev);
  } catch (const std::exception& e) {
    run.error = true;
    run.error_message = e.what();
    run.final_l_sol = run.validation_l_sol = run.final_lambda_w = kNaN;
    log_warning("run " + run_label(run.configuration, seed) + " failed: " + e.what());
  }
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

void write_scenario_data(const ExperimentConfig& config, const ScenarioData& data,
                         const std::string& directory) {
  fs::create_directories(directory);
  auto table = [](const ReferenceData& r) {
    NumericTable t{{"t", "x1", "x2"}, {}};
    for (std::size_t i = 0; i < r.times.size(); ++i)
      t.rows.push_back({r.times[i], r.states[i][0], r.states[i][1]});
    return t;
  };
  write_csv((fs::path(directory) / "data.csv").string(), table(data.train));
  write_csv((fs::path(directory) / "validation.csv").string(), table(data.validation));
  NumericTable targets{{"frequency_hz", "damping", "stiffness", "mean_frequency_hz", "mean_damping",
                        "mean_stiffness"},
                       {}};
  targets.rows.push_back({config.frequency.value_or(data.mean_frequency),
                          config.damping.value_or(data.mean_damping),
                          std::max(1.0, config.stiffness.value_or(data.mean_stiffness)),
                          data.mean_frequency, data.mean_damping, data.mean_stiffness});
  write_csv((fs::path(directory) / "targets.csv").string(), targets);
}

const RunResult* ExperimentResult::find(const std::string& configuration,
                                        std::uint64_t seed) const {
  const std::string name = LossSpec::from_names(configuration).name();
  for (const auto& r : runs)
    if (r.configuration == name && r.seed == seed) return &r;
  return nullptr;
}

namespace {

std::string run_status(const RunResult& r) {
  if (r.error) return "error";
  if (r.log.aborted) return "aborted";
  return "ok";
}

std::size_t total(const TrainingLog& log, std::size_t StepRecord::*field) {
  std::size_t n = 0;
  for (const auto& s : log.steps) n += s.*field;
  return n;
}

void write_summary(const ExperimentResult& result, const std::string& format) {
  const fs::path dir = result.config.output_dir;
  if (format == "json") {
    nlohmann::json j;
    j["name"] = result.config.name;
    j["scenario"] = scenario_name(result.config.scenario);
    j["steps"] = result.config.steps;
    j["targets"] = {{"frequency_hz", result.config.frequency.value_or(result.data.mean_frequency)},
                    {"damping", result.config.damping.value_or(result.data.mean_damping)}};
    j["runs"] = nlohmann::json::array();
    for (const auto& r : result.runs)
      j["runs"].push_back({{"configuration", r.configuration},
                           {"seed", r.seed},
                           {"status", run_status(r)},
                           {"error", r.error_message},
                           {"steps_completed", r.log.steps.size()},
                           {"failed_steps", r.log.failed_steps},
                           {"final_l_sol", r.final_l_sol},
                           {"validation_l_sol", r.validation_l_sol},
                           {"final_lambda_w", r.final_lambda_w},
                           {"degenerate_instants", total(r.log, &StepRecord::degenerate_instants)},
                           {"skipped_gradients", total(r.log, &StepRecord::skipped_gradients)},
                           {"seconds", r.seconds}});
    std::ofstream out(dir / "summary.json", std::ios::binary);
    out << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(dir / "summary.csv", std::ios::binary);
  write_csv_row(out, {"configuration", "seed", "status", "steps_completed", "failed_steps",
                      "final_l_sol", "validation_l_sol", "final_lambda_w", "degenerate_instants",
                      "skipped_gradients", "seconds"});
  for (const auto& r : result.runs)
    write_csv_row(out, {r.configuration, std::to_string(r.seed), run_status(r),
                        std::to_string(r.log.steps.size()), std::to_string(r.log.failed_steps),
                        format_number(r.final_l_sol), format_number(r.validation_l_sol),
                        format_number(r.final_lambda_w),
                        std::to_string(total(r.log, &StepRecord::degenerate_instants)),
                        std::to_string(total(r.log, &StepRecord::skipped_gradients)),
                        format_number(r.seconds)});
}

void write_comparison_svg(const ExperimentResult& result) {
  // One line per configuration, on the first seed.
  const std::uint64_t seed = result.config.seeds.front();
  std::vector<const RunResult*> runs;
  std::vector<std::vector<double>> x1;
  for (const auto& r : result.runs) {
    if (r.seed != seed || r.error) continue;
    runs.push_back(&r);
    x1.push_back(model_first_state(evaluate_final(result.config, result.data, r.network),
                                   result.data.validation.times.size()));
  }
  write_svg((fs::path(result.config.output_dir) / "summary.svg").string(),
            comparison_panels(result.data, runs, x1));
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  if (options.summary_format != "csv" && options.summary_format != "json")
    throw ConfigError("summary format must be csv or json");
  ExperimentResult result;
  result.config = config;
  result.data = generate_data(config);
  if (options.write_outputs) write_scenario_data(config, result.data, config.output_dir);

  struct Task {
    std::string configuration;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (const auto& c : config.configurations)
    for (std::uint64_t s : config.seeds) tasks.push_back({c, s});
  result.runs.resize(tasks.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      const auto& t = tasks[i];
      std::string dir;
      if (options.write_outputs)
        dir = (fs::path(config.output_dir) / LossSpec::from_names(t.configuration).name() /
               ("seed_" + std::to_string(t.seed)))
                  .string();
      result.runs[i] = run_single(config, result.data, t.configuration, t.seed, dir);
      log_info("finished " + run_label(result.runs[i].configuration, t.seed));
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(options.threads, 1, tasks.size());
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  if (options.write_outputs) {
    write_summary(result, options.summary_format);
    write_comparison_svg(result);
  }
  return result;
}

}  // namespace einode
