#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "borrowkit/error.hpp"
#include "borrowkit/parallel.hpp"
#include "borrowkit/pipeline.hpp"
#include "borrowkit/rng.hpp"

namespace borrowkit {

enum class ScenarioId { I = 1, II, III, IV, V, VI, VII, VIII, IX, X, XI, XII };

inline std::string to_string(ScenarioId id) {
  static constexpr std::array<const char*, 12> kNames = {"I",   "II", "III", "IV", "V",  "VI",
                                                         "VII", "VIII", "IX", "X",  "XI", "XII"};
  return kNames.at(static_cast<std::size_t>(id) - 1);
}

inline ScenarioId parse_scenario(const std::string& text) {
  for (int i = 1; i <= 12; ++i) {
    const auto id = static_cast<ScenarioId>(i);
    if (to_string(id) == text) return id;
  }
  throw ValidationError("unknown scenario '" + text + "' (expected I..XII)");
}

/// One simulation setting. Means are for covariates 2-4; the treatment-defining
/// covariate is standard normal everywhere.
struct ScenarioSpec {
  ScenarioId id;
  std::array<double, 3> mu_current;
  double sigma2;
  std::array<double, 3> mu_external;
  double eta2;
};

inline const std::vector<ScenarioSpec>& scenario_table() {
  static const std::vector<ScenarioSpec> kTable = [] {
    constexpr std::array<double, 3> shifted{1.2, 1.5, 1.6};
    constexpr std::array<double, 3> base{1.0, 1.0, 1.0};
    return std::vector<ScenarioSpec>{
        {ScenarioId::I, shifted, 1.0, base, 1.0},     {ScenarioId::II, base, 1.0, base, 1.0},
        {ScenarioId::III, shifted, 3.0, base, 3.0},   {ScenarioId::IV, base, 3.0, base, 3.0},
        {ScenarioId::V, shifted, 10.0, base, 10.0},   {ScenarioId::VI, base, 10.0, base, 10.0},
        {ScenarioId::VII, shifted, 1.0, base, 1.5},   {ScenarioId::VIII, base, 1.0, base, 1.5},
        {ScenarioId::IX, shifted, 3.0, base, 4.0},    {ScenarioId::X, base, 3.0, base, 4.0},
        {ScenarioId::XI, shifted, 10.0, base, 12.0},  {ScenarioId::XII, base, 10.0, base, 12.0},
    };
  }();
  return kTable;
}

inline const ScenarioSpec& scenario(ScenarioId id) {
  return scenario_table().at(static_cast<std::size_t>(id) - 1);
}

struct GenConfig {
  int n = 100;  // current study, split evenly by the median of covariate 1
  int n_e = 1000;
  double beta0 = 0.0;
  double theta = 2.0;
  std::array<double, 3> beta{1.0, 1.5, -1.3};
  // Sensitivity/test hooks.
  bool continuous_treatment_covariate = false;  // outcome uses theta * x1 instead of theta * T
  bool zero_noise = false;
};

struct TrialData {
  TrialInput input;
  Eigen::VectorXi treatment_indicator;  // over current-study subjects in generation order
};

namespace detail {

inline double median_of(Eigen::VectorXd v) {
  const auto n = static_cast<std::size_t>(v.size());
  std::vector<double> buf(v.data(), v.data() + n);
  std::sort(buf.begin(), buf.end());
  return n % 2 == 1 ? buf[n / 2] : 0.5 * (buf[n / 2 - 1] + buf[n / 2]);
}

inline ArmData rows_to_arm(const Eigen::MatrixXd& covariates, const Eigen::VectorXd& y,
                           const std::vector<Eigen::Index>& rows) {
  ArmData arm;
  arm.x.resize(static_cast<Eigen::Index>(rows.size()), covariates.cols() + 1);
  arm.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto i = static_cast<Eigen::Index>(r);
    arm.x(i, 0) = 1.0;
    arm.x.row(i).tail(covariates.cols()) = covariates.row(rows[r]);
    arm.y(i) = y(rows[r]);
  }
  return arm;
}

}  // namespace detail

/// Draws one current study (treatment by median split of covariate 1) and
/// one all-control external study. Analysis designs hold intercept + covariates 2-4.
inline TrialData generate_trial(const ScenarioSpec& spec, const GenConfig& gen, RngStream& rng) {
  if (gen.n < 10 || gen.n % 2 != 0) throw ValidationError("n must be even and at least 10");
  if (gen.n_e < 2) throw ValidationError("n_e must be at least 2");
  const Eigen::Index n = gen.n;
  const Eigen::Index n_e = gen.n_e;

  auto draw_covariates = [&rng](Eigen::Index rows, const std::array<double, 3>& mu) {
    Eigen::MatrixXd x(rows, 4);
    for (Eigen::Index i = 0; i < rows; ++i) {
      x(i, 0) = rng.normal();
      for (int j = 0; j < 3; ++j) x(i, j + 1) = mu[static_cast<std::size_t>(j)] + rng.normal();
    }
    return x;
  };
  const Eigen::MatrixXd cur = draw_covariates(n, spec.mu_current);
  const Eigen::MatrixXd ext = draw_covariates(n_e, spec.mu_external);
  Eigen::VectorXd eps_cur(n), eps_ext(n_e);
  for (Eigen::Index i = 0; i < n; ++i) eps_cur(i) = rng.normal();
  for (Eigen::Index i = 0; i < n_e; ++i) eps_ext(i) = rng.normal();
  const double sd_cur = gen.zero_noise ? 0.0 : std::sqrt(spec.sigma2);
  const double sd_ext = gen.zero_noise ? 0.0 : std::sqrt(spec.eta2);

  const Eigen::Vector3d beta(gen.beta[0], gen.beta[1], gen.beta[2]);
  const double cut = detail::median_of(cur.col(0));
  TrialData out;
  out.treatment_indicator.resize(n);
  Eigen::VectorXd y_cur(n), y_ext(n_e);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int t = cur(i, 0) >= cut ? 1 : 0;
    out.treatment_indicator(i) = t;
    const double effect = gen.continuous_treatment_covariate ? gen.theta * cur(i, 0) : gen.theta * t;
    y_cur(i) = gen.beta0 + effect + cur.row(i).tail<3>().dot(beta) + sd_cur * eps_cur(i);
  }
  for (Eigen::Index i = 0; i < n_e; ++i) {
    const double effect = gen.continuous_treatment_covariate ? gen.theta * ext(i, 0) : 0.0;
    y_ext(i) = gen.beta0 + effect + ext.row(i).tail<3>().dot(beta) + sd_ext * eps_ext(i);
  }

  std::vector<Eigen::Index> treated, controls, external(static_cast<std::size_t>(n_e));
  for (Eigen::Index i = 0; i < n; ++i) (out.treatment_indicator(i) ? treated : controls).push_back(i);
  for (Eigen::Index i = 0; i < n_e; ++i) external[static_cast<std::size_t>(i)] = i;

  const Eigen::MatrixXd cur_cov = cur.rightCols(3);
  const Eigen::MatrixXd ext_cov = ext.rightCols(3);
  out.input.treatment = detail::rows_to_arm(cur_cov, y_cur, treated);
  out.input.control = detail::rows_to_arm(cur_cov, y_cur, controls);
  out.input.external = detail::rows_to_arm(ext_cov, y_ext, external);
  out.input.ps_treatment = out.input.treatment.x.rightCols(3);
  out.input.ps_control = out.input.control.x.rightCols(3);
  out.input.ps_external = out.input.external.x.rightCols(3);
  return out;
}

struct ReplicationResult {
  double estimate = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  PowerParams params_used;
  MpiReport mpi;
  double ess = 0.0;
  int retries = 0;
};

inline constexpr int kMaxReplicationRetries = 3;

/// Generates one trial from the replication stream and analyzes it. A failed
/// attempt (e.g. a separated propensity fit) is redrawn from a derived
/// sub-stream, at most kMaxReplicationRetries times.
inline ReplicationResult run_replication(const ScenarioSpec& spec, const GenConfig& gen,
                                         const AnalysisOptions& options, const RngStream& rng) {
  for (int attempt = 0;; ++attempt) {
    const RngStream base = attempt == 0 ? rng : rng.derive(1000 + static_cast<std::uint64_t>(attempt));
    try {
      RngStream data_rng = base.derive(0);
      const TrialData trial = generate_trial(spec, gen, data_rng);
      const TrialAnalysis analysis = analyze_trial(trial.input, options, base.derive(1));
      ReplicationResult r;
      r.estimate = analysis.effect.mean;
      r.lower = analysis.effect.lower95;
      r.upper = analysis.effect.upper95;
      r.params_used = analysis.plan.params;
      r.mpi = analysis.plan.calibration.report;
      r.ess = analysis.plan.weights.ess;
      r.retries = attempt;
      return r;
    } catch (const ValidationError&) {
      throw;
    } catch (const Error&) {
      if (attempt >= kMaxReplicationRetries) throw;
    }
  }
}

struct ReplicationRecord {
  double estimate;
  double lower;
  double upper;
};

struct MetricsRow {
  std::string strategy;
  ScenarioId scenario = ScenarioId::I;
  int n = 0;
  int n_e = 0;
  double mean = 0.0;
  double bias = 0.0;
  double abias = 0.0;
  double rmse = 0.0;
  double se = std::numeric_limits<double>::quiet_NaN();
  double width = 0.0;
  double cp = 0.0;
  int replications = 0;
  int retries = 0;
};

namespace detail {

inline MetricsRow location_metrics(std::span<const ReplicationRecord> records, double truth) {
  MetricsRow row;
  const double b = static_cast<double>(records.size());
  double sum = 0.0, err = 0.0, abs_err = 0.0, sq_err = 0.0, width = 0.0, covered = 0.0;
  for (const auto& r : records) {
    sum += r.estimate;
    err += r.estimate - truth;
    abs_err += std::fabs(r.estimate - truth);
    sq_err += (r.estimate - truth) * (r.estimate - truth);
    width += r.upper - r.lower;
    if (r.lower <= truth && truth <= r.upper) covered += 1.0;
  }
  row.mean = sum / b;
  row.bias = err / b;
  row.abias = abs_err / b;
  row.rmse = std::sqrt(sq_err / b);
  row.width = width / b;
  row.cp = covered / b;
  row.replications = static_cast<int>(records.size());
  return row;
}

}  // namespace detail

/// Operating characteristics over B replications. Bias is reported as
/// mean(estimate - truth); RMSE as sqrt(mean squared error); SE as the
/// sample SD of the estimates.
inline MetricsRow evaluate(std::span<const ReplicationRecord> records, double truth = 2.0) {
  if (records.size() < 2) throw TooFewRows("evaluate needs at least two replications");
  MetricsRow row = detail::location_metrics(records, truth);
  double ss = 0.0;
  for (const auto& r : records) ss += (r.estimate - row.mean) * (r.estimate - row.mean);
  row.se = std::sqrt(ss / static_cast<double>(records.size() - 1));
  return row;
}

struct StudyConfig {
  std::vector<ScenarioId> scenarios;
  std::vector<Strategy> strategies;
  GenConfig gen;
  AnalysisOptions analysis;  // strategy field ignored; taken from `strategies`
  int replications = 100;
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

struct StudyCell {
  MetricsRow row;
  std::vector<ReplicationResult> replications;
};

struct StudyResult {
  std::vector<StudyCell> cells;  // scenario-major, then strategy, in config order

  std::vector<MetricsRow> rows() const {
    std::vector<MetricsRow> out;
    out.reserve(cells.size());
    for (const auto& c : cells) out.push_back(c.row);
    return out;
  }
};

/// B replications for every (scenario, strategy) pair. Replication b always
/// uses RngStream(seed, b), so every strategy sees the same simulated trial
/// and results do not depend on the thread count.
inline StudyResult run_study(const StudyConfig& config) {
  if (config.replications < 1) throw ValidationError("replications must be at least 1");
  if (config.scenarios.empty() || config.strategies.empty()) {
    throw ValidationError("study needs at least one scenario and one strategy");
  }
  const std::size_t n_cells = config.scenarios.size() * config.strategies.size();
  const auto reps = static_cast<std::size_t>(config.replications);
  std::vector<ReplicationResult> flat(n_cells * reps);
  parallel_for(flat.size(), config.threads, [&](std::size_t task) {
    const std::size_t cell = task / reps;
    const std::size_t b = task % reps;
    const ScenarioSpec& spec = scenario(config.scenarios[cell / config.strategies.size()]);
    AnalysisOptions options = config.analysis;
    options.strategy = config.strategies[cell % config.strategies.size()];
    flat[task] = run_replication(spec, config.gen, options, RngStream(config.seed, b));
  });

  StudyResult result;
  result.cells.reserve(n_cells);
  for (std::size_t cell = 0; cell < n_cells; ++cell) {
    StudyCell c;
    c.replications.assign(flat.begin() + static_cast<std::ptrdiff_t>(cell * reps),
                          flat.begin() + static_cast<std::ptrdiff_t>((cell + 1) * reps));
    std::vector<ReplicationRecord> records;
    records.reserve(reps);
    int retries = 0;
    for (const auto& r : c.replications) {
      records.push_back({r.estimate, r.lower, r.upper});
      retries += r.retries;
    }
    c.row = reps >= 2 ? evaluate(records, config.gen.theta) : detail::location_metrics(records, config.gen.theta);
    c.row.strategy = config.strategies[cell % config.strategies.size()].label();
    c.row.scenario = config.scenarios[cell / config.strategies.size()];
    c.row.n = config.gen.n;
    c.row.n_e = config.gen.n_e;
    c.row.retries = retries;
    result.cells.push_back(std::move(c));
  }
  return result;
}

/// Median and interquartile range (type-7 quantiles).
struct MedianIqr {
  double median = 0.0;
  double iqr = 0.0;
};

inline MedianIqr median_iqr(std::vector<double> values) {
  if (values.empty()) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  std::sort(values.begin(), values.end());
  auto q = [&](double p) {
    const double h = (static_cast<double>(values.size()) - 1.0) * p;
    const auto j = static_cast<std::size_t>(std::floor(h));
    const std::size_t k = std::min(j + 1, values.size() - 1);
    return values[j] + (h - static_cast<double>(j)) * (values[k] - values[j]);
  };
  return {q(0.5), q(0.75) - q(0.25)};
}

}  // namespace borrowkit
