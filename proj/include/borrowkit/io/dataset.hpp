#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "borrowkit/error.hpp"
#include "borrowkit/io/config.hpp"
#include "borrowkit/io/csv.hpp"
#include "borrowkit/pipeline.hpp"

namespace borrowkit::io {

struct DatasetCounts {
  Eigen::Index current_treatment = 0;
  Eigen::Index current_control = 0;
  Eigen::Index external_control = 0;
  Eigen::Index external_treated_ignored = 0;
};

struct Dataset {
  TrialInput input;
  DatasetCounts counts;
};

/// Binds CSV columns by name. External rows with treatment = 1 are not
/// controls and take no part in borrowing; they are counted and skipped.
inline Dataset build_dataset(const CsvTable& table, const AnalysisConfig& config) {
  std::vector<std::string> missing;
  auto need = [&](const std::string& name) {
    const int idx = table.column(name);
    if (idx < 0 && std::find(missing.begin(), missing.end(), name) == missing.end()) missing.push_back(name);
    return idx;
  };
  const int outcome = need(config.outcome_column);
  const int treatment = need(config.treatment_column);
  const int source = need(config.source_column);
  std::vector<int> cov, ps_cov;
  for (const auto& name : config.covariate_columns) cov.push_back(need(name));
  for (const auto& name : config.ps_columns()) ps_cov.push_back(need(name));
  if (!missing.empty()) {
    std::string msg = "missing column(s):";
    for (const auto& m : missing) msg += " " + m;
    throw ValidationError(msg);
  }

  enum class Group { treatment, control, external, skipped };
  std::vector<Group> groups(table.rows.size());
  std::vector<std::string> problems;
  auto note = [&](std::size_t row, const std::string& what) {
    if (problems.size() < 20) problems.push_back("row " + std::to_string(row + 2) + ": " + what);
    else if (problems.size() == 20) problems.push_back("...");
  };
  auto numeric = [&](std::size_t r, int col, double& value) {
    if (!parse_double(table.rows[r][static_cast<std::size_t>(col)], value) || !std::isfinite(value)) {
      note(r, "column '" + table.header[static_cast<std::size_t>(col)] + "' is not a finite number ('" +
                  table.rows[r][static_cast<std::size_t>(col)] + "')");
      return false;
    }
    return true;
  };

  const auto q = static_cast<Eigen::Index>(cov.size());
  const auto p = static_cast<Eigen::Index>(ps_cov.size());
  Eigen::MatrixXd x_all(static_cast<Eigen::Index>(table.rows.size()), q + 1);
  Eigen::MatrixXd ps_all(static_cast<Eigen::Index>(table.rows.size()), p);
  Eigen::VectorXd y_all(static_cast<Eigen::Index>(table.rows.size()));
  Dataset out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto i = static_cast<Eigen::Index>(r);
    const std::string& src = table.rows[r][static_cast<std::size_t>(source)];
    const std::string& trt = table.rows[r][static_cast<std::size_t>(treatment)];
    bool ok = true;
    if (src != "current" && src != "external") {
      note(r, "source must be 'current' or 'external' (got '" + src + "')");
      ok = false;
    }
    if (trt != "0" && trt != "1") {
      note(r, "treatment must be 0 or 1 (got '" + trt + "')");
      ok = false;
    }
    double value = 0.0;
    ok = numeric(r, outcome, value) && ok;
    y_all(i) = value;
    x_all(i, 0) = 1.0;
    for (Eigen::Index j = 0; j < q; ++j) {
      ok = numeric(r, cov[static_cast<std::size_t>(j)], value) && ok;
      x_all(i, j + 1) = value;
    }
    for (Eigen::Index j = 0; j < p; ++j) {
      ok = numeric(r, ps_cov[static_cast<std::size_t>(j)], value) && ok;
      ps_all(i, j) = value;
    }
    if (!ok) continue;
    const bool current = src == "current";
    const bool treated = trt == "1";
    if (current) groups[r] = treated ? Group::treatment : Group::control;
    else groups[r] = treated ? Group::skipped : Group::external;
  }
  if (!problems.empty()) {
    std::string msg = "invalid data:";
    for (const auto& pmsg : problems) msg += "\n  " + pmsg;
    throw ValidationError(msg);
  }

  auto gather = [&](Group g, ArmData& arm, Eigen::MatrixXd& ps) {
    Eigen::Index count = 0;
    for (auto gr : groups) count += gr == g;
    arm.x.resize(count, q + 1);
    arm.y.resize(count);
    ps.resize(count, p);
    Eigen::Index k = 0;
    for (std::size_t r = 0; r < groups.size(); ++r) {
      if (groups[r] != g) continue;
      const auto i = static_cast<Eigen::Index>(r);
      arm.x.row(k) = x_all.row(i);
      arm.y(k) = y_all(i);
      ps.row(k) = ps_all.row(i);
      ++k;
    }
    return count;
  };
  out.counts.current_treatment = gather(Group::treatment, out.input.treatment, out.input.ps_treatment);
  out.counts.current_control = gather(Group::control, out.input.control, out.input.ps_control);
  out.counts.external_control = gather(Group::external, out.input.external, out.input.ps_external);
  for (auto gr : groups) out.counts.external_treated_ignored += gr == Group::skipped;
  if (out.counts.current_treatment < 1 || out.counts.current_control < 1) {
    throw ValidationError("dataset needs at least one current treatment row and one current control row");
  }
  return out;
}

/// Writes a trial in the layout build_dataset reads back: source, treatment,
/// y, then one column per non-intercept design column (named x1, x2, ...).
/// Numbers use shortest round-trip text, so re-reading is bit-exact.
inline CsvTable trial_to_csv(const TrialInput& input) {
  CsvTable t;
  const Eigen::Index q = input.control.cols() - 1;
  t.header = {"source", "treatment", "y"};
  for (Eigen::Index j = 0; j < q; ++j) t.header.push_back("x" + std::to_string(j + 1));
  auto emit = [&](const ArmData& arm, const char* source, const char* treated) {
    for (Eigen::Index i = 0; i < arm.rows(); ++i) {
      std::vector<std::string> row = {source, treated, format_exact(arm.y(i))};
      for (Eigen::Index j = 0; j < q; ++j) row.push_back(format_exact(arm.x(i, j + 1)));
      t.rows.push_back(std::move(row));
    }
  };
  emit(input.treatment, "current", "1");
  emit(input.control, "current", "0");
  emit(input.external, "external", "0");
  return t;
}

}  // namespace borrowkit::io
