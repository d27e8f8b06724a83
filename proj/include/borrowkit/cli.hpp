#pragma once

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "borrowkit/error.hpp"
#include "borrowkit/io/config.hpp"
#include "borrowkit/io/csv.hpp"
#include "borrowkit/io/dataset.hpp"
#include "borrowkit/io/fixture.hpp"
#include "borrowkit/io/report.hpp"
#include "borrowkit/pipeline.hpp"
#include "borrowkit/simulation.hpp"

namespace borrowkit::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Runs `body`, mapping exceptions to exit codes with a one-line diagnostic.
template <class F>
int guarded(F&& body, std::ostream& err = std::cerr) {
  try {
    body();
    return kExitOk;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

/// BORROWKIT_THREADS, or 0 (machine parallelism) when unset.
inline unsigned threads_from_env() {
  const char* text = std::getenv("BORROWKIT_THREADS");
  if (!text || !*text) return 0;
  char* end = nullptr;
  const long v = std::strtol(text, &end, 10);
  if (*end != '\0' || v < 1) throw ValidationError("BORROWKIT_THREADS must be a positive integer");
  return static_cast<unsigned>(v);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
  if (!out.flush()) throw Error("failed writing '" + path + "'");
}

inline io::AnalysisConfig load_config(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return io::parse_config(j);
}

inline io::Dataset load_dataset(const std::string& path, const io::AnalysisConfig& config) {
  std::istringstream in(read_file(path));
  return io::build_dataset(io::read_csv(in), config);
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::vector<std::string> scenarios = {"all"};
  int n = 100;
  int n_ext = 1000;
  int reps = 100;
  int draws = 5000;
  int burn_in = 2000;
  std::vector<std::string> strategies;  // empty: psw-bpp plus FB at 0, 0.5, 1
  std::uint64_t seed = 0;
  std::string out;  // empty: stdout
  std::string format = "csv";
  std::string mpi_weighting = "weighted";
  std::string mpi_functional = "minimal_tail";
  bool fb_weighted = false;
  std::optional<unsigned> threads;  // overrides BORROWKIT_THREADS
};

inline StudyConfig study_config(const SimulateArgs& a) {
  StudyConfig c;
  for (const auto& s : a.scenarios) {
    if (s == "all") {
      for (const auto& spec : scenario_table()) c.scenarios.push_back(spec.id);
    } else {
      c.scenarios.push_back(parse_scenario(s));
    }
  }
  if (a.strategies.empty()) {
    c.strategies = {Strategy::psw_bpp(), Strategy::fixed_at(0, 0), Strategy::fixed_at(0.5, 0.5),
                    Strategy::fixed_at(1, 1)};
  } else {
    for (const auto& s : a.strategies) c.strategies.push_back(Strategy::parse(s));
  }
  if (a.n < 10 || a.n % 2 != 0) throw ValidationError("--n must be even and at least 10");
  if (a.n_ext < 2) throw ValidationError("--n-ext must be at least 2");
  if (a.reps < 1 || a.draws < 1 || a.burn_in < 0) {
    throw ValidationError("--reps and --draws must be positive, --burn-in nonnegative");
  }
  if (a.format != "csv" && a.format != "md" && a.format != "json") {
    throw ValidationError("--format must be csv, md or json");
  }
  c.gen.n = a.n;
  c.gen.n_e = a.n_ext;
  c.replications = a.reps;
  c.analysis.draws = a.draws;
  c.analysis.burn_in = a.burn_in;
  c.analysis.fb_weighted = a.fb_weighted;
  if (a.mpi_weighting != "weighted" && a.mpi_weighting != "raw") {
    throw ValidationError("--mpi-weighting must be weighted or raw");
  }
  c.analysis.calibration.weighting = a.mpi_weighting == "weighted" ? MpiWeighting::weighted : MpiWeighting::raw;
  if (a.mpi_functional != "minimal_tail" && a.mpi_functional != "level_set") {
    throw ValidationError("--mpi-functional must be minimal_tail or level_set");
  }
  c.analysis.calibration.functional =
      a.mpi_functional == "minimal_tail" ? MpiFunctional::minimal_tail : MpiFunctional::level_set;
  c.seed = a.seed;
  c.threads = a.threads ? *a.threads : threads_from_env();
  return c;
}

inline std::string render_study(const StudyResult& result, const StudyConfig& config, const std::string& format) {
  std::ostringstream out;
  if (format == "csv") {
    io::write_metrics_csv(out, result.rows());
  } else if (format == "md") {
    io::write_study_markdown(out, result, config.gen.theta);
  } else {
    out << io::study_json(result, config).dump(2) << '\n';
  }
  return out.str();
}

inline void cmd_simulate(const SimulateArgs& args, std::ostream& out = std::cout) {
  const StudyConfig config = study_config(args);
  const std::string text = render_study(run_study(config), config, args.format);
  if (args.out.empty()) out << text;
  else write_file(args.out, text);
}

// ---------------------------------------------------------------- analyze

inline io::AnalysisReport analyze_dataset(const io::Dataset& data, const io::AnalysisConfig& config) {
  const RngStream rng(config.seed, 0);
  const AnalysisOptions options = config.analysis_options();
  const TrialAnalysis borrowed = analyze_trial(data.input, options, rng);
  AnalysisOptions baseline = options;
  baseline.strategy = Strategy::fixed_at(0, 0);
  baseline.fb_weighted = false;
  const TrialAnalysis reference = analyze_trial(data.input, baseline, rng);

  io::AnalysisReport r;
  r.effect = borrowed.effect;
  r.mpi = borrowed.plan.calibration.report;
  r.ess_borrowed = borrowed.effect.ess_borrowed;
  r.ess_external = borrowed.plan.weights.ess;
  r.success = borrowed.effect.prob_positive > config.success_threshold;
  r.no_borrow_comparison = reference.effect;
  r.guard_applied = borrowed.plan.guard_applied;
  if (borrowed.plan.propensity) r.ps_coefficients = borrowed.plan.propensity->coefficients;
  return r;
}

inline nlohmann::json cmd_analyze(const std::string& data_csv, const std::string& config_json) {
  const io::AnalysisConfig config = load_config(config_json);
  const io::Dataset data = load_dataset(data_csv, config);
  return io::to_json(analyze_dataset(data, config), config, data.counts);
}

// ---------------------------------------------------------------- mpi

inline nlohmann::json mpi_for_dataset(const io::Dataset& data, const io::AnalysisConfig& config) {
  const BorrowingPlan plan = plan_borrowing(data.input, arm_summary(data.input.control), config.analysis_options());
  return io::mpi_payload(plan);
}

inline nlohmann::json cmd_mpi(const std::string& data_csv, const std::string& config_json) {
  const io::AnalysisConfig config = load_config(config_json);
  return mpi_for_dataset(load_dataset(data_csv, config), config);
}

// ---------------------------------------------------------------- scenarios / fixture

inline void cmd_scenarios(std::ostream& out = std::cout) { io::write_scenarios_csv(out, scenario_table()); }

inline void cmd_fixture(const io::FixtureOptions& options, const std::string& data_out, const std::string& config_out,
                        std::uint64_t analysis_seed) {
  std::ostringstream csv;
  io::write_csv(csv, io::synthetic_fixture(options));
  write_file(data_out, csv.str());
  if (!config_out.empty()) write_file(config_out, io::to_json(io::fixture_config(analysis_seed)).dump(2) + "\n");
}

}  // namespace borrowkit::cli
