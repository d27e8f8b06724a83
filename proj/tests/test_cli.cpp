#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <boost/math/distributions/fisher_f.hpp>

#include "borrowkit/cli.hpp"

using namespace borrowkit;
namespace fs = std::filesystem;

namespace {

io::AnalysisConfig small_config(const std::string& strategy = "psw-bpp") {
  io::AnalysisConfig c = io::fixture_config(11);
  c.draws = 2000;
  c.burn_in = 200;
  c.strategy = Strategy::parse(strategy);
  return c;
}

io::Dataset fixture_dataset(const io::AnalysisConfig& c, bool matched = false) {
  io::FixtureOptions o;
  o.matched = matched;
  return io::build_dataset(io::synthetic_fixture(o), c);
}

// Current study from the fixture; external controls replaced by `make_external`.
template <class F>
io::Dataset with_external(const io::AnalysisConfig& c, F make_external) {
  io::Dataset d = fixture_dataset(c);
  make_external(d.input);
  d.input.ps_external = d.input.external.x.rightCols(d.input.external.cols() - 1);
  d.counts.external_control = d.input.external.rows();
  return d;
}

fs::path scratch_dir() {
  const fs::path p = fs::temp_directory_path() / "borrowkit_cli_test";
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("fixed(0,0) analysis equals its own no-borrowing comparison", "[analyze]") {
  const io::AnalysisConfig c = small_config("fixed:0,0");
  const io::AnalysisReport r = cli::analyze_dataset(fixture_dataset(c), c);
  CHECK(r.effect.mean == r.no_borrow_comparison.mean);
  CHECK(r.effect.lower95 == r.no_borrow_comparison.lower95);
  CHECK(r.effect.upper95 == r.no_borrow_comparison.upper95);
  CHECK(r.effect.sd == r.no_borrow_comparison.sd);
  CHECK(r.effect.prob_positive == r.no_borrow_comparison.prob_positive);
}

TEST_CASE("zero external rows: guard applies and the report equals the baseline", "[analyze]") {
  const io::AnalysisConfig c = small_config();
  const io::Dataset d = with_external(c, [](TrialInput& in) {
    in.external.x.resize(0, in.control.cols());
    in.external.y.resize(0);
  });
  const io::AnalysisReport r = cli::analyze_dataset(d, c);
  CHECK(r.guard_applied);
  CHECK(r.effect.power_params == PowerParams{0, 0});
  CHECK(r.effect.mean == r.no_borrow_comparison.mean);
  CHECK(r.effect.width == r.no_borrow_comparison.width);
  CHECK(r.ess_borrowed == 0.0);
  const auto j = io::to_json(r, c, d.counts);
  CHECK(j.contains("notes"));
}

TEST_CASE("success flag compares prob_positive with the threshold", "[analyze]") {
  io::AnalysisConfig c = small_config();
  const io::AnalysisReport r = cli::analyze_dataset(fixture_dataset(c), c);
  CHECK(r.success == (r.effect.prob_positive > c.success_threshold));
  c.success_threshold = 0.999999;
  CHECK_FALSE(cli::analyze_dataset(fixture_dataset(c), c).success);
}

TEST_CASE("report JSON carries every field and the provenance", "[analyze]") {
  const io::AnalysisConfig c = small_config();
  const io::Dataset d = fixture_dataset(c);
  const auto j = io::to_json(cli::analyze_dataset(d, c), c, d.counts);
  for (const char* key : {"effect", "mpi", "ess_borrowed", "success", "no_borrow_comparison", "provenance", "counts"}) {
    CHECK(j.contains(key));
  }
  CHECK(j["provenance"]["seed"] == 11);
  CHECK(io::parse_config(j["provenance"]["config"]).seed == 11);
  CHECK(j["effect"].contains("prob_positive"));
}

TEST_CASE("mpi payload has exactly the documented keys", "[mpi]") {
  const io::AnalysisConfig c = small_config();
  const auto j = cli::mpi_for_dataset(fixture_dataset(c), c);
  std::set<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.insert(it.key());
  CHECK(keys == std::set<std::string>{"t_stat", "mpi_mean", "f_stat", "mpi_var", "dof_mean", "dof_f", "a1", "a2"});
}

TEST_CASE("identical current and external controls give t = 0 and a full mean index", "[mpi]") {
  io::AnalysisConfig c = small_config("fixed:1,1");  // unit weights
  c.mpi_functional = MpiFunctional::level_set;
  const io::Dataset d = with_external(c, [](TrialInput& in) { in.external = in.control; });
  const auto j = cli::mpi_for_dataset(d, c);
  CHECK(j["t_stat"].get<double>() == 0.0);
  CHECK(j["mpi_mean"].get<double>() == 1.0);

  c.mpi_functional = MpiFunctional::minimal_tail;
  CHECK(cli::mpi_for_dataset(d, c)["mpi_mean"].get<double>() == 0.5);
}

TEST_CASE("tenfold external variance drives the variance index near zero", "[mpi]") {
  const io::AnalysisConfig c = small_config("fixed:1,1");
  const io::Dataset d = with_external(c, [](TrialInput& in) {
    in.external = in.control;
    const Eigen::VectorXd fitted = in.control.x * arm_summary(in.control).theta_hat;
    in.external.y = fitted + std::sqrt(10.0) * (in.control.y - fitted);
  });
  const auto j = cli::mpi_for_dataset(d, c);
  const double f = j["f_stat"].get<double>();
  CHECK(std::fabs(f - 10.0) < 1e-9);
  const auto dof = j["dof_f"].get<std::vector<int>>();
  const boost::math::fisher_f dist(dof[0], dof[1]);
  const double oracle = boost::math::cdf(boost::math::complement(dist, f));
  CHECK(std::fabs(j["mpi_var"].get<double>() - oracle) < 1e-12);
  CHECK(j["mpi_var"].get<double>() < 0.05);
}

TEST_CASE("analysis through files reproduces the in-memory analysis", "[analyze]") {
  GenConfig gen;
  gen.n = 60;
  gen.n_e = 150;
  RngStream rng(12, 0);
  const TrialData trial = generate_trial(scenario(ScenarioId::III), gen, rng);
  const fs::path dir = scratch_dir();
  {
    std::ofstream out(dir / "trial.csv");
    io::write_csv(out, io::trial_to_csv(trial.input));
  }
  io::AnalysisConfig c;
  c.outcome_column = "y";
  c.treatment_column = "treatment";
  c.source_column = "source";
  c.covariate_columns = {"x1", "x2", "x3"};
  c.seed = 99;
  c.draws = 1000;
  c.burn_in = 100;
  {
    std::ofstream out(dir / "trial.json");
    out << io::to_json(c).dump();
  }
  const auto from_files = cli::cmd_analyze((dir / "trial.csv").string(), (dir / "trial.json").string());
  io::Dataset in_memory;
  in_memory.input = trial.input;
  in_memory.counts = {30, 30, 150, 0};
  const auto direct = io::to_json(cli::analyze_dataset(in_memory, c), c, in_memory.counts);
  CHECK(from_files == direct);
}

TEST_CASE("file errors surface as validation errors", "[analyze]") {
  CHECK_THROWS_AS(cli::cmd_analyze("/nonexistent/data.csv", "/nonexistent/config.json"), ValidationError);
  const fs::path dir = scratch_dir();
  {
    std::ofstream out(dir / "bad.json");
    out << "{ not json";
  }
  CHECK_THROWS_AS(cli::load_config((dir / "bad.json").string()), ValidationError);
}

TEST_CASE("exit codes map the error taxonomy", "[cli]") {
  std::ostringstream err;
  CHECK(cli::guarded([] {}, err) == 0);
  CHECK(cli::guarded([] { throw ValidationError("bad flag"); }, err) == 2);
  CHECK(cli::guarded([] { throw NonConvergence("slow"); }, err) == 1);
  CHECK(err.str().find("bad flag") != std::string::npos);
}

TEST_CASE("simulate argument validation", "[cli]") {
  cli::SimulateArgs a;
  a.seed = 1;
  CHECK(cli::study_config(a).scenarios.size() == 12);
  CHECK(cli::study_config(a).strategies.size() == 4);
  a.scenarios = {"II", "IV"};
  a.strategies = {"psw-bpp"};
  CHECK(cli::study_config(a).scenarios.size() == 2);
  auto bad = [](auto mutate) {
    cli::SimulateArgs b;
    mutate(b);
    std::ostringstream sink;
    return cli::guarded([&] { cli::study_config(b); }, sink);
  };
  CHECK(bad([](cli::SimulateArgs& b) { b.scenarios = {"XIV"}; }) == 2);
  CHECK(bad([](cli::SimulateArgs& b) { b.strategies = {"fixed:3,3"}; }) == 2);
  CHECK(bad([](cli::SimulateArgs& b) { b.n = 11; }) == 2);
  CHECK(bad([](cli::SimulateArgs& b) { b.reps = 0; }) == 2);
  CHECK(bad([](cli::SimulateArgs& b) { b.format = "xml"; }) == 2);
}

TEST_CASE("simulate output formats", "[cli]") {
  cli::SimulateArgs a;
  a.seed = 3;
  a.scenarios = {"I"};
  a.strategies = {"psw-bpp", "fixed:0,0"};
  a.n = 40;
  a.n_ext = 100;
  a.reps = 4;
  a.draws = 300;
  a.burn_in = 20;
  a.threads = 1;
  for (const char* fmt : {"csv", "md", "json"}) {
    a.format = fmt;
    std::ostringstream out;
    cli::cmd_simulate(a, out);
    const std::string text = out.str();
    CHECK_FALSE(text.empty());
    if (a.format == "csv") {
      CHECK(text.rfind("strategy,scenario,n,n_e,bias,abias,rmse,se,width,cp\n", 0) == 0);
      CHECK(std::count(text.begin(), text.end(), '\n') == 3);
    }
    if (a.format == "json") CHECK(nlohmann::json::parse(text)["rows"].size() == 2);
  }
}

TEST_CASE("scenario listing is static", "[cli]") {
  std::ostringstream a, b;
  cli::cmd_scenarios(a);
  cli::cmd_scenarios(b);
  const std::string text = a.str();
  CHECK(text == b.str());
  CHECK(std::count(text.begin(), text.end(), '\n') == 13);
}
