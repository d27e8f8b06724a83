#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "borrowkit/cli.hpp"

namespace bk = borrowkit;

int main(int argc, char** argv) {
  CLI::App app{"borrowkit: propensity-weighted borrowing of external controls"};
  app.require_subcommand(1);

  bk::cli::SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run the simulation study and write operating characteristics");
  simulate->add_option("--scenario", sim.scenarios, "Scenario I..XII or all (repeatable)")->capture_default_str();
  simulate->add_option("--n", sim.n, "Current-trial size")->capture_default_str();
  simulate->add_option("--n-ext", sim.n_ext, "External-cohort size")->capture_default_str();
  simulate->add_option("--reps", sim.reps, "Replications per cell")->capture_default_str();
  simulate->add_option("--draws", sim.draws, "Posterior draws kept")->capture_default_str();
  simulate->add_option("--burn-in", sim.burn_in, "Posterior draws discarded")->capture_default_str();
  simulate->add_option("--strategy", sim.strategies,
                       "psw-bpp or fixed:a1,a2 (repeatable; default psw-bpp and fixed at 0, 0.5, 1)");
  simulate->add_option("--seed", sim.seed, "Base seed")->required();
  simulate->add_option("--out", sim.out, "Output path (default stdout)");
  simulate->add_option("--format", sim.format, "csv, md or json")
      ->check(CLI::IsMember({"csv", "md", "json"}))
      ->capture_default_str();
  simulate->add_option("--mpi-weighting", sim.mpi_weighting, "weighted or raw")
      ->check(CLI::IsMember({"weighted", "raw"}))
      ->capture_default_str();
  simulate->add_option("--mpi-functional", sim.mpi_functional, "minimal_tail or level_set")
      ->check(CLI::IsMember({"minimal_tail", "level_set"}))
      ->capture_default_str();
  simulate->add_flag("--fb-weighted", sim.fb_weighted, "Use PS weights for fixed borrowing");
  unsigned threads = 0;
  simulate->add_option("--threads", threads, "Worker threads (overrides BORROWKIT_THREADS)");

  std::string data_csv, config_json, out_path;
  auto* analyze = app.add_subcommand("analyze", "Analyze a subject-level CSV and write a JSON report");
  analyze->add_option("--data", data_csv, "Dataset CSV")->required();
  analyze->add_option("--config", config_json, "Analysis config JSON")->required();
  analyze->add_option("--out", out_path, "Report path (default stdout)");

  auto* mpi = app.add_subcommand("mpi", "Print the similarity diagnostics and power parameters");
  mpi->add_option("--data", data_csv, "Dataset CSV")->required();
  mpi->add_option("--config", config_json, "Analysis config JSON")->required();

  auto* scenarios = app.add_subcommand("scenarios", "Print the simulation scenario table as CSV");

  bk::io::FixtureOptions fx;
  std::string fixture_out, fixture_config_out;
  std::uint64_t analysis_seed = 1;
  auto* fixture = app.add_subcommand("fixture", "Write the SYNTHETIC dementia-style example dataset");
  fixture->add_option("--out", fixture_out, "Dataset CSV path")->required();
  fixture->add_option("--config-out", fixture_config_out, "Also write a matching config JSON");
  fixture->add_option("--seed", fx.seed, "Generator seed")->capture_default_str();
  fixture->add_option("--analysis-seed", analysis_seed, "Seed written into the config")->capture_default_str();
  fixture->add_option("--effect", fx.effect, "True exposure effect")->capture_default_str();
  fixture->add_flag("--matched", fx.matched, "Draw the external cohort from the current profile");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return bk::cli::kExitUsage;
  }

  return bk::cli::guarded([&] {
    if (simulate->parsed()) {
      if (simulate->count("--threads")) sim.threads = threads;
      bk::cli::cmd_simulate(sim);
    } else if (analyze->parsed()) {
      const std::string text = bk::cli::cmd_analyze(data_csv, config_json).dump(2) + "\n";
      if (out_path.empty()) std::cout << text;
      else bk::cli::write_file(out_path, text);
    } else if (mpi->parsed()) {
      std::cout << bk::cli::cmd_mpi(data_csv, config_json).dump(2) << '\n';
    } else if (scenarios->parsed()) {
      bk::cli::cmd_scenarios();
    } else if (fixture->parsed()) {
      bk::cli::cmd_fixture(fx, fixture_out, fixture_config_out, analysis_seed);
    }
  });
}
