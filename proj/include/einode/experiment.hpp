#pragma once

// Configuration-driven case studies: reference data generation for the three
// scenarios, gradient-configuration sweeps over seeds, and the per-run CSV,
// checkpoint and SVG outputs.

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "einode/config.hpp"
#include "einode/csv.hpp"
#include "einode/losses.hpp"
#include "einode/ode.hpp"
#include "einode/trainer.hpp"

namespace einode {

enum class Scenario { oscillator, nyquist, vanderpol };

const char* scenario_name(Scenario s) noexcept;
Scenario parse_scenario(const std::string& name);

/// Equidistant grid given either as a rate (t_k = k / rate) or as an interval (t_k = k · dt).
struct SampleGrid {
  double rate = 0.0;      // Hz; used when > 0
  double interval = 0.0;  // s

  double spacing() const noexcept { return rate > 0.0 ? 1.0 / rate : interval; }
  /// Every t_k ≤ t_end (with a 1e-9 relative allowance for the endpoint).
  std::vector<double> times(double t_end) const;
};

struct ExperimentConfig {
  std::string name = "experiment";
  Scenario scenario = Scenario::oscillator;

  // Reference system.
  double c = 25.0;   // N/m
  double d = 0.05;   // N·s/m
  double m = 1.0;    // kg
  double mu = 2.0;   // Van der Pol

  SampleGrid sampling{10.0, 0.0};
  double horizon = 10.0;  // s
  std::vector<double> x0 = {1.0, 0.0};
  SampleGrid validation{10.0, 0.0};

  std::vector<std::string> configurations = {"SOL"};
  std::size_t steps = 5000;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  GradientStrategy strategy;
  AdamConfig adam;
  std::size_t hidden = 32;
  std::size_t max_consecutive_failures = 50;
  /// Write params checkpoints every this many steps (0: final parameters only).
  std::size_t checkpoint_every = 0;

  ErrorMetric metric = ErrorMetric::absolute;
  PairMetric pair_metric = PairMetric::target;
  /// Unset targets are derived from the reference trajectory.
  std::optional<double> frequency, damping, stiffness;
  std::optional<std::pair<double, double>> stiffness_corridor;
  std::size_t eigen_stride = 1;
  std::array<double, kLossKindCount> scalings = LossSpec{}.scalings;

  SolverConfig solver;
  double data_tolerance = 1e-10;

  std::string output_dir = "out";

  void validate() const;
};

/// Reads every table of the document; unknown keys are a ConfigError.
ExperimentConfig parse_experiment_config(const ConfigDocument& doc);
ExperimentConfig load_experiment_config(const std::string& path);

/// The ground-truth system of the scenario.
std::unique_ptr<OdeSystem> reference_system(const ExperimentConfig& config);

struct ScenarioData {
  std::pair<double, double> t_span;  // [0, last sample]
  ReferenceData train;               // the sampled grid
  ReferenceData validation;          // dense grid over t_span
  /// Time averages over the sampled reference states of the jacobian eigen properties.
  double mean_frequency = 0.0;
  double mean_damping = 0.0;
  double mean_stiffness = 1.0;
};

/// Ground-truth solve at data_tolerance, sampled on the configured and validation grids.
ScenarioData generate_data(const ExperimentConfig& config);

/// The loss spec of one configuration name, with targets filled from the config or the data.
LossSpec make_loss_spec(const ExperimentConfig& config, const std::string& configuration,
                        const ScenarioData& data);
TrainingProblem make_training_problem(const ExperimentConfig& config, const ScenarioData& data);

struct RunResult {
  std::string configuration;
  std::uint64_t seed = 0;
  std::string directory;  // empty when outputs were not written
  bool error = false;     // the run threw outside the trainer's step isolation
  std::string error_message;
  TrainingLog log;
  DenseNetwork network;
  /// Final network against the training samples and the dense validation grid (NaN if the
  /// final network cannot be solved).
  double final_l_sol = 0.0;
  double validation_l_sol = 0.0;
  /// Max Re λ over the training save points for the final network.
  double final_lambda_w = 0.0;
  double seconds = 0.0;
};

struct ExperimentResult {
  ExperimentConfig config;
  ScenarioData data;
  std::vector<RunResult> runs;  // configuration-major, then seed, in config order

  const RunResult* find(const std::string& configuration, std::uint64_t seed) const;
};

struct RunOptions {
  std::size_t threads = 1;
  bool write_outputs = true;
  /// "csv" or "json" for the experiment summary file.
  std::string summary_format = "csv";
};

/// All configuration × seed runs. Each run is isolated: an exception is recorded in its
/// RunResult and the sweep continues.
ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

/// One run without the sweep machinery; writes its outputs when `directory` is non-empty.
RunResult run_single(const ExperimentConfig& config, const ScenarioData& data,
                     const std::string& configuration, std::uint64_t seed,
                     const std::string& directory);

/// data.csv and validation.csv (t, x1, x2) plus targets.csv.
void write_scenario_data(const ExperimentConfig& config, const ScenarioData& data,
                         const std::string& directory);

/// Rows of training_log.csv; identical for identical runs.
NumericTable training_log_table(const TrainingLog& log);

}  // namespace einode
