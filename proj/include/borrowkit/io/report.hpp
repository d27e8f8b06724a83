#pragma once

#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "borrowkit/effect.hpp"
#include "borrowkit/error.hpp"
#include "borrowkit/io/config.hpp"
#include "borrowkit/io/csv.hpp"
#include "borrowkit/io/dataset.hpp"
#include "borrowkit/mpi.hpp"
#include "borrowkit/pipeline.hpp"
#include "borrowkit/simulation.hpp"

namespace borrowkit::io {

inline constexpr const char* kMetricsCsvHeader = "strategy,scenario,n,n_e,bias,abias,rmse,se,width,cp";
inline constexpr const char* kScenarioCsvHeader = "scenario,mu2,mu3,mu4,sigma2,mu_e2,mu_e3,mu_e4,eta2";

inline void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
  out << kMetricsCsvHeader << '\n';
  for (const auto& r : rows) {
    out << r.strategy << ',' << to_string(r.scenario) << ',' << r.n << ',' << r.n_e << ','
        << format_fixed(r.bias) << ',' << format_fixed(r.abias) << ',' << format_fixed(r.rmse) << ','
        << format_fixed(r.se) << ',' << format_fixed(r.width) << ',' << format_fixed(r.cp) << '\n';
  }
}

inline std::string strategy_display(const std::string& label) {
  if (label == "psw-bpp") return "PSW-BPP";
  const auto slash = label.find('/');
  if (label.rfind("fixed:", 0) == 0 && slash != std::string::npos) {
    return "FB (a1=" + label.substr(6, slash - 6) + ", a2=" + label.substr(slash + 1) + ")";
  }
  return label;
}

/// Markdown tables: operating characteristics, then mPI summaries for data-adaptive rows.
inline void write_study_markdown(std::ostream& out, const StudyResult& result, double truth) {
  out << "| Strategy | Scenario | n | n_e | theta | Mean | Bias | ABias | RMSE | SE | Width | CP | Retries |\n"
      << "|---|---|---|---|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& c : result.cells) {
    const auto& r = c.row;
    out << "| " << strategy_display(r.strategy) << " | " << to_string(r.scenario) << " | " << r.n << " | "
        << r.n_e << " | " << format_fixed(truth, 0) << " | " << format_fixed(r.mean, 3) << " | "
        << format_fixed(r.bias, 3) << " | " << format_fixed(r.abias, 3) << " | " << format_fixed(r.rmse, 3)
        << " | " << format_fixed(r.se, 3) << " | " << format_fixed(r.width, 3) << " | "
        << format_fixed(r.cp, 2) << " | " << r.retries << " |\n";
  }
  bool any = false;
  for (const auto& c : result.cells) any = any || c.row.strategy == "psw-bpp";
  if (!any) return;
  out << "\n| Scenario | mPI mean (median) | mPI mean (IQR) | mPI variance (median) | mPI variance (IQR) |\n"
      << "|---|---|---|---|---|\n";
  for (const auto& c : result.cells) {
    if (c.row.strategy != "psw-bpp") continue;
    std::vector<double> a1, a2;
    for (const auto& r : c.replications) {
      a1.push_back(r.mpi.mpi_mean);
      a2.push_back(r.mpi.mpi_var);
    }
    const auto m1 = median_iqr(a1);
    const auto m2 = median_iqr(a2);
    out << "| " << to_string(c.row.scenario) << " | " << format_fixed(m1.median, 3) << " | "
        << format_fixed(m1.iqr, 3) << " | " << format_fixed(m2.median, 3) << " | " << format_fixed(m2.iqr, 3)
        << " |\n";
  }
}

inline nlohmann::json study_json(const StudyResult& result, const StudyConfig& config) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& c : result.cells) {
    const auto& r = c.row;
    nlohmann::json row = {{"strategy", r.strategy}, {"scenario", to_string(r.scenario)},
                          {"n", r.n},               {"n_e", r.n_e},
                          {"mean", r.mean},         {"bias", r.bias},
                          {"abias", r.abias},       {"rmse", r.rmse},
                          {"se", r.se},             {"width", r.width},
                          {"cp", r.cp},             {"replications", r.replications},
                          {"retries", r.retries}};
    std::vector<double> mm, mv, ess;
    for (const auto& rep : c.replications) {
      mm.push_back(rep.mpi.mpi_mean);
      mv.push_back(rep.mpi.mpi_var);
      ess.push_back(rep.ess);
    }
    const auto m1 = median_iqr(mm), m2 = median_iqr(mv), me = median_iqr(ess);
    row["mpi_mean"] = {{"median", m1.median}, {"iqr", m1.iqr}};
    row["mpi_var"] = {{"median", m2.median}, {"iqr", m2.iqr}};
    row["ess"] = {{"median", me.median}, {"iqr", me.iqr}};
    rows.push_back(row);
  }
  return {{"seed", config.seed},
          {"replications", config.replications},
          {"draws", config.analysis.draws},
          {"burn_in", config.analysis.burn_in},
          {"truth", config.gen.theta},
          {"rows", rows}};
}

inline void write_scenarios_csv(std::ostream& out, const std::vector<ScenarioSpec>& table) {
  auto g = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return std::string(buf);
  };
  out << kScenarioCsvHeader << '\n';
  for (const auto& s : table) {
    out << to_string(s.id) << ',' << g(s.mu_current[0]) << ',' << g(s.mu_current[1]) << ','
        << g(s.mu_current[2]) << ',' << g(s.sigma2) << ',' << g(s.mu_external[0]) << ','
        << g(s.mu_external[1]) << ',' << g(s.mu_external[2]) << ',' << g(s.eta2) << '\n';
  }
}

inline std::vector<ScenarioSpec> read_scenarios_csv(std::istream& in) {
  const CsvTable t = read_csv(in);
  if (t.header.size() != 9) throw ValidationError("scenario CSV must have 9 columns");
  std::vector<ScenarioSpec> out;
  for (const auto& row : t.rows) {
    double v[8];
    for (int k = 0; k < 8; ++k) {
      if (!parse_double(row[static_cast<std::size_t>(k + 1)], v[k])) {
        throw ValidationError("scenario CSV: bad number '" + row[static_cast<std::size_t>(k + 1)] + "'");
      }
    }
    out.push_back({parse_scenario(row[0]), {v[0], v[1], v[2]}, v[3], {v[4], v[5], v[6]}, v[7]});
  }
  return out;
}

inline nlohmann::json to_json(const EffectSummary& e) {
  return {{"mean", e.mean},
          {"sd", e.sd},
          {"lower95", e.lower95},
          {"upper95", e.upper95},
          {"width", e.width},
          {"prob_positive", e.prob_positive},
          {"ess_borrowed", e.ess_borrowed},
          {"power_params", {{"a1", e.power_params.a1}, {"a2", e.power_params.a2}}}};
}

inline nlohmann::json to_json(const MpiReport& m) {
  return {{"t_stat", m.t_stat},     {"mpi_mean", m.mpi_mean},
          {"f_stat", m.f_stat},     {"mpi_var", m.mpi_var},
          {"dof_mean", m.dof_mean}, {"dof_f", {m.dof_f.first, m.dof_f.second}},
          {"degenerate", m.degenerate}};
}

/// The `mpi` command's payload: exactly t_stat, mpi_mean, f_stat, mpi_var, dof_mean, dof_f, a1, a2.
inline nlohmann::json mpi_payload(const BorrowingPlan& plan) {
  const MpiReport& m = plan.calibration.report;
  return {{"t_stat", m.t_stat},     {"mpi_mean", m.mpi_mean},
          {"f_stat", m.f_stat},     {"mpi_var", m.mpi_var},
          {"dof_mean", m.dof_mean}, {"dof_f", {m.dof_f.first, m.dof_f.second}},
          {"a1", plan.params.a1},   {"a2", plan.params.a2}};
}

struct AnalysisReport {
  EffectSummary effect;
  MpiReport mpi;
  double ess_borrowed = 0.0;
  bool success = false;
  EffectSummary no_borrow_comparison;
  bool guard_applied = false;
  std::optional<Eigen::VectorXd> ps_coefficients;
  double ess_external = 0.0;
};

inline nlohmann::json to_json(const AnalysisReport& r, const AnalysisConfig& config, const DatasetCounts& counts) {
  nlohmann::json j = {
      {"effect", to_json(r.effect)},
      {"mpi", to_json(r.mpi)},
      {"ess_borrowed", r.ess_borrowed},
      {"ess_external", r.ess_external},
      {"success", r.success},
      {"success_threshold", config.success_threshold},
      {"no_borrow_comparison", to_json(r.no_borrow_comparison)},
      {"guard_applied", r.guard_applied},
      {"counts",
       {{"current_treatment", counts.current_treatment},
        {"current_control", counts.current_control},
        {"external_control", counts.external_control},
        {"external_treated_ignored", counts.external_treated_ignored}}},
      {"provenance", {{"seed", config.seed}, {"config", to_json(config)}}},
  };
  if (r.ps_coefficients) {
    j["propensity_coefficients"] =
        std::vector<double>(r.ps_coefficients->data(), r.ps_coefficients->data() + r.ps_coefficients->size());
  }
  if (r.guard_applied) {
    j["notes"] = {"fewer than two usable external controls: power parameters forced to (0, 0)"};
  }
  return j;
}

}  // namespace borrowkit::io
