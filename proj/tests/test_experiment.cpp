#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "einode/experiment.hpp"

using namespace einode;
namespace fs = std::filesystem;

namespace {

ExperimentConfig preset(const std::string& name) {
  return load_experiment_config(std::string(EINODE_PRESET_DIR) + "/" + name + ".toml");
}

ExperimentConfig parse(const std::string& text) {
  return parse_experiment_config(ConfigDocument::parse(text, "test.toml"));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("sample grid counts") {
  const ScenarioData osc = generate_data(preset("oscillator"));
  CHECK(osc.train.times.size() == 101);
  CHECK(osc.train.times.back() == 10.0);
  const ScenarioData nyq = generate_data(preset("nyquist"));
  CHECK(nyq.train.times.size() == 14);
  CHECK(nyq.train.times[1] == 0.75);
  CHECK(nyq.train.times.back() == 9.75);
  CHECK(nyq.validation.times[1] == doctest::Approx(0.1));
  const ScenarioData vdp = generate_data(preset("vanderpol"));
  CHECK(vdp.train.times.size() == 91);
  CHECK(vdp.train.times.back() == doctest::Approx(30.0));
}

TEST_CASE("preset systems and targets") {
  const ExperimentConfig nyq = preset("nyquist");
  CHECK(nyq.c == doctest::Approx(4 * M_PI * M_PI));
  CHECK(*nyq.frequency == 0.99921);
  const ScenarioData d = generate_data(nyq);
  CHECK(d.mean_frequency == doctest::Approx(0.99921).epsilon(1e-5));
  CHECK(d.mean_damping == doctest::Approx(0.039789).epsilon(1e-5));
  const ExperimentConfig osc = preset("oscillator");
  CHECK(osc.configurations.size() == 6);
  CHECK(osc.steps == 5000);
  CHECK(osc.x0 == std::vector<double>{1.0, 0.0});
  const ExperimentConfig vdp = preset("vanderpol");
  CHECK_FALSE(vdp.frequency.has_value());
  const ScenarioData vd = generate_data(vdp);
  const LossSpec spec = make_loss_spec(vdp, "SOL+OSC+FRQ+DMP", vd);
  CHECK(*spec.frequency.constant == vd.mean_frequency);
  CHECK(*spec.damping.constant == vd.mean_damping);
}

TEST_CASE("data generation is converged in the solver tolerance") {
  for (const char* name : {"oscillator", "nyquist", "vanderpol"}) {
    INFO(name);
    ExperimentConfig c = preset(name);
    const ScenarioData a = generate_data(c);
    c.data_tolerance /= 2.0;
    const ScenarioData b = generate_data(c);
    double diff = 0.0;
    for (std::size_t i = 0; i < a.train.states.size(); ++i)
      for (std::size_t j = 0; j < 2; ++j)
        diff = std::max(diff, std::abs(a.train.states[i][j] - b.train.states[i][j]));
    CHECK(diff < 1e-8);
  }
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(parse("scenario = \"pendulum\"\n"), ConfigError);
  CHECK_THROWS_AS(parse("[sampling]\nhorizon = -1\n"), ConfigError);
  CHECK_THROWS_AS(parse("[sampling]\nrate = 10\ninterval = 0.1\n"), ConfigError);
  CHECK_THROWS_AS(parse("[sampling]\ninterval = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse("[training]\nconfigurations = [\"SOL+XYZ\"]\n"), ConfigError);
  CHECK_THROWS_AS(parse("[training]\nsteps = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse("[training]\nstrategy = \"nope\"\n"), ConfigError);
  CHECK_THROWS_AS(parse("[system]\nc = 1\nf_max = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse("[system]\nm = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse("[losses]\nfrequency = \"high\"\n"), ConfigError);
  CHECK_THROWS_WITH_AS(parse("[sampling]\nrat = 10\n"), doctest::Contains("unknown key"),
                       ConfigError);
  // The sub-Nyquist scenario must actually undersample its mode.
  CHECK_THROWS_AS(parse("scenario = \"nyquist\"\n[sampling]\ninterval = 0.25\n"), ConfigError);
  CHECK_THROWS_AS(load_experiment_config("/nonexistent/missing.toml"), ConfigError);
  CHECK_NOTHROW(parse("scenario = \"nyquist\"\n"));
}

TEST_CASE("smoke sweep writes every artifact and shares the initial parameters") {
  ExperimentConfig c = preset("smoke");
  const fs::path out = fs::temp_directory_path() / "einode_smoke_test";
  fs::remove_all(out);
  c.output_dir = out.string();
  c.steps = 10;
  c.checkpoint_every = 5;
  RunOptions options;
  options.threads = 2;
  const ExperimentResult r = run_experiment(c, options);
  REQUIRE(r.runs.size() == 2);
  for (const auto& run : r.runs) {
    INFO(run.configuration);
    CHECK_FALSE(run.error);
    CHECK(run.log.steps.size() == 10);
    const fs::path dir = run.directory;
    for (const char* f : {"training_log.csv", "timing.csv", "trajectory.csv",
                          "eigen_trajectory.csv", "params.bin", "summary.svg",
                          "checkpoints/params_step_5.bin", "checkpoints/params_step_10.bin"})
      CHECK(fs::exists(dir / f));
    const NumericTable log = read_csv((dir / "training_log.csv").string());
    CHECK(log.rows.size() == 10);
    CHECK(log.rows[3][log.column("l_SOL")] == run.log.steps[3].losses[0]);
    CHECK(log.rows[3][log.column("sensitivity_solves")] == 1.0);
    const NumericTable traj = read_csv((dir / "trajectory.csv").string());
    CHECK(traj.rows.size() == 101);
    const DenseNetwork saved = load_parameters((dir / "params.bin").string());
    CHECK(std::equal(saved.parameters().begin(), saved.parameters().end(),
                     run.network.parameters().begin()));
  }
  for (const char* f : {"data.csv", "validation.csv", "targets.csv", "summary.csv", "summary.svg"})
    CHECK(fs::exists(out / f));
  // Data written to disk reproduces the in-memory samples exactly.
  const NumericTable data = read_csv((out / "data.csv").string());
  for (std::size_t i = 0; i < data.rows.size(); ++i) {
    CHECK(data.rows[i][1] == r.data.train.states[i][0]);
    CHECK(data.rows[i][2] == r.data.train.states[i][1]);
  }
  // Both configurations of a seed start from the same parameters.
  const DenseNetwork a = load_parameters(
      (fs::path(r.runs[0].directory) / "checkpoints/params_step_5.bin").string());
  CHECK(a.parameter_count() == 129);
  CHECK(r.runs[0].log.steps[0].losses[0] == r.runs[1].log.steps[0].losses[0]);
  std::istringstream summary(slurp(out / "summary.csv"));
  std::string line;
  std::size_t lines = 0;
  while (std::getline(summary, line)) ++lines;
  CHECK(lines == 3);
  fs::remove_all(out);
}

TEST_CASE("identical runs write identical training logs") {
  ExperimentConfig c = preset("smoke");
  c.steps = 15;
  const ScenarioData data = generate_data(c);
  const fs::path base = fs::temp_directory_path() / "einode_determinism_test";
  fs::remove_all(base);
  const RunResult a = run_single(c, data, "SOL+STB+FRQ+DMP", 1, (base / "a").string());
  const RunResult b = run_single(c, data, "SOL+STB+FRQ+DMP", 1, (base / "b").string());
  CHECK_FALSE(a.error);
  CHECK(slurp(base / "a/training_log.csv") == slurp(base / "b/training_log.csv"));
  fs::remove_all(base);
}

TEST_CASE("a failing run is isolated") {
  ExperimentConfig c = preset("smoke");
  c.steps = 3;
  c.solver.max_steps = 2;
  c.max_consecutive_failures = 2;
  c.output_dir = (fs::temp_directory_path() / "einode_isolation_test").string();
  fs::remove_all(c.output_dir);
  const ExperimentResult r = run_experiment(c);
  REQUIRE(r.runs.size() == 2);
  for (const auto& run : r.runs) {
    CHECK(run.log.aborted);
    CHECK(std::isnan(run.final_l_sol));
  }
  CHECK(fs::exists(fs::path(c.output_dir) / "summary.csv"));
  fs::remove_all(c.output_dir);
}
