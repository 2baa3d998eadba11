// einode: command-line front end for the experiments, the derivative checks and
// a standalone eigen-analysis utility.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

#include <cctype>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "einode/csv.hpp"
#include "einode/eigen.hpp"
#include "einode/errors.hpp"
#include "einode/experiment.hpp"
#include "einode/gradcheck.hpp"
#include "einode/log.hpp"

namespace {

using namespace einode;

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct GlobalOptions {
  std::string format = "csv";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> steps;
  std::optional<std::string> out_dir;
  std::size_t threads = 1;
  bool verbose = false;
  bool quiet = false;
};

ExperimentConfig load_with_overrides(const std::string& path, const GlobalOptions& g) {
  ExperimentConfig config = load_experiment_config(path);
  if (g.seed) config.seeds = {*g.seed};
  if (g.steps) config.steps = *g.steps;
  if (g.out_dir) config.output_dir = *g.out_dir;
  config.validate();
  return config;
}

int cmd_run(const std::string& path, const GlobalOptions& g) {
  const ExperimentConfig config = load_with_overrides(path, g);
  RunOptions options;
  options.threads = g.threads;
  options.summary_format = g.format;
  const ExperimentResult result = run_experiment(config, options);
  bool any_error = false;
  if (g.format == "json") {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : result.runs) {
      any_error = any_error || r.error;
      j.push_back({{"configuration", r.configuration},
                   {"seed", r.seed},
                   {"status", r.error ? "error" : (r.log.aborted ? "aborted" : "ok")},
                   {"final_l_sol", r.final_l_sol},
                   {"validation_l_sol", r.validation_l_sol},
                   {"final_lambda_w", r.final_lambda_w},
                   {"directory", r.directory}});
    }
    std::cout << j.dump(2) << '\n';
  } else {
    write_csv_row(std::cout, {"configuration", "seed", "status", "final_l_sol", "validation_l_sol",
                              "final_lambda_w", "directory"});
    for (const auto& r : result.runs) {
      any_error = any_error || r.error;
      write_csv_row(std::cout, {r.configuration, std::to_string(r.seed),
                                r.error ? "error" : (r.log.aborted ? "aborted" : "ok"),
                                format_number(r.final_l_sol), format_number(r.validation_l_sol),
                                format_number(r.final_lambda_w), r.directory});
    }
  }
  return any_error ? kExitRuntime : 0;
}

int cmd_generate_data(const std::string& path, const GlobalOptions& g) {
  const ExperimentConfig config = load_with_overrides(path, g);
  const ScenarioData data = generate_data(config);
  write_scenario_data(config, data, config.output_dir);
  if (g.format == "json") {
    nlohmann::json j = {{"scenario", scenario_name(config.scenario)},
                        {"samples", data.train.times.size()},
                        {"validation_samples", data.validation.times.size()},
                        {"t_end", data.t_span.second},
                        {"mean_frequency_hz", data.mean_frequency},
                        {"mean_damping", data.mean_damping},
                        {"mean_stiffness", data.mean_stiffness},
                        {"directory", config.output_dir}};
    std::cout << j.dump(2) << '\n';
  } else {
    write_csv_row(std::cout, {"scenario", "samples", "validation_samples", "t_end",
                              "mean_frequency_hz", "mean_damping", "mean_stiffness", "directory"});
    write_csv_row(std::cout, {scenario_name(config.scenario), std::to_string(data.train.times.size()),
                              std::to_string(data.validation.times.size()),
                              format_number(data.t_span.second), format_number(data.mean_frequency),
                              format_number(data.mean_damping), format_number(data.mean_stiffness),
                              config.output_dir});
  }
  return 0;
}

int cmd_gradcheck(const GlobalOptions& g) {
  const auto results = run_gradcheck(g.seed.value_or(1));
  bool ok = true;
  if (g.format == "json") {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : results) {
      ok = ok && r.passed;
      j.push_back({{"name", r.name},
                   {"cases", r.cases},
                   {"max_error", r.max_error},
                   {"tolerance", r.tolerance},
                   {"passed", r.passed}});
    }
    std::cout << j.dump(2) << '\n';
  } else {
    write_csv_row(std::cout, {"name", "cases", "max_error", "tolerance", "passed"});
    for (const auto& r : results) {
      ok = ok && r.passed;
      write_csv_row(std::cout, {r.name, std::to_string(r.cases), format_number(r.max_error),
                                format_number(r.tolerance), r.passed ? "true" : "false"});
    }
  }
  return ok ? 0 : kExitRuntime;
}

// Either a JSON nested array or one row per line, entries separated by spaces, tabs, commas
// or semicolons; '#' starts a comment.
RealMatrix read_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open matrix file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  std::vector<std::vector<double>> rows;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '[') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
      for (const auto& row : j) rows.push_back(row.get<std::vector<double>>());
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("matrix file '" + path + "': " + e.what());
    }
  } else {
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
      line = line.substr(0, line.find('#'));
      for (char& c : line)
        if (c == ',' || c == ';') c = ' ';
      std::istringstream fields(line);
      std::vector<double> row;
      std::string field;
      while (fields >> field) {
        try {
          row.push_back(parse_number(field));
        } catch (const Error&) {
          throw ConfigError("matrix file '" + path + "': malformed entry '" + field + "'");
        }
      }
      if (!row.empty()) rows.push_back(std::move(row));
    }
  }
  if (rows.empty()) throw ConfigError("matrix file '" + path + "' holds no entries");
  RealMatrix a(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != a.cols() || rows.size() != a.cols())
      throw ConfigError("matrix file '" + path + "': matrix must be square");
    for (std::size_t j = 0; j < a.cols(); ++j) a(i, j) = rows[i][j];
  }
  if (!all_finite(a)) throw ConfigError("matrix file '" + path + "': entries must be finite");
  return a;
}

int cmd_eigen(const std::string& path, const GlobalOptions& g) {
  const RealMatrix a = read_matrix(path);
  const EigenResult eig = eigen(a);
  const double stiffness = stiffness_ratio(eig.values);
  if (g.format == "json") {
    nlohmann::json j;
    j["eigenvalues"] = nlohmann::json::array();
    for (const Complex& l : eig.values)
      j["eigenvalues"].push_back({{"re", l.real()},
                                  {"im", l.imag()},
                                  {"frequency_hz", eigen_frequency(l)},
                                  {"damping", eigen_damping(l)}});
    j["stiffness"] = stiffness;
    j["degenerate"] = eig.degenerate;
    std::cout << j.dump(2) << '\n';
  } else {
    write_csv_row(std::cout, {"index", "re", "im", "frequency_hz", "damping", "stiffness"});
    for (std::size_t i = 0; i < eig.values.size(); ++i) {
      const Complex l = eig.values[i];
      write_csv_row(std::cout, {std::to_string(i), format_number(l.real()), format_number(l.imag()),
                                format_number(eigen_frequency(l)), format_number(eigen_damping(l)),
                                format_number(stiffness)});
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Eigen-informed NeuralODE training and analysis"};
  app.require_subcommand(1);
  GlobalOptions g;
  std::uint64_t seed = 0;
  std::size_t steps = 0;
  std::string out_dir;
  auto* seed_opt = app.add_option("--seed", seed, "Run only this seed (gradcheck: base seed)");
  auto* steps_opt = app.add_option("--steps", steps, "Override the training step count")
                        ->check(CLI::PositiveNumber);
  auto* out_opt = app.add_option("--out-dir", out_dir, "Override the output directory");
  app.add_option("--threads", g.threads, "Parallel runs in a sweep")->check(CLI::PositiveNumber);
  app.add_option("--format", g.format, "Report format")->check(CLI::IsMember({"csv", "json"}));
  app.add_flag("--verbose", g.verbose, "Log progress");
  app.add_flag("--quiet", g.quiet, "Suppress warnings");

  std::string run_path, data_path, matrix_path;
  auto* run = app.add_subcommand("run", "Train every configuration x seed of an experiment");
  run->add_option("config", run_path, "Experiment config file")->required();
  auto* gen = app.add_subcommand("generate-data", "Write the reference data of an experiment");
  gen->add_option("config", data_path, "Experiment config file")->required();
  auto* gc = app.add_subcommand("gradcheck", "Finite-difference checks of every derivative path");
  auto* eig = app.add_subcommand("eigen", "Eigenvalues, frequency, damping and stiffness of a matrix");
  eig->add_option("matrix", matrix_path, "Matrix file (rows of numbers or a JSON nested array)")
      ->required();
  for (auto* sub : {run, gen, gc, eig}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }
  if (seed_opt->count()) g.seed = seed;
  if (steps_opt->count()) g.steps = steps;
  if (out_opt->count()) g.out_dir = out_dir;
  set_log_level(g.quiet ? LogLevel::quiet : (g.verbose ? LogLevel::info : LogLevel::warning));

  try {
    if (run->parsed()) return cmd_run(run_path, g);
    if (gen->parsed()) return cmd_generate_data(data_path, g);
    if (gc->parsed()) return cmd_gradcheck(g);
    if (eig->parsed()) return cmd_eigen(matrix_path, g);
  } catch (const ConfigError& e) {
    std::cerr << "einode: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "einode: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
