#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "borrowkit/error.hpp"
#include "borrowkit/pipeline.hpp"

namespace borrowkit::io {

/// Column bindings and run settings for analyzing a subject-level CSV.
struct AnalysisConfig {
  std::string outcome_column;
  std::string treatment_column;
  std::string source_column;
  std::vector<std::string> covariate_columns;
  std::optional<std::vector<std::string>> ps_covariate_columns;  // defaults to covariate_columns
  int draws = 5000;
  int burn_in = 2000;
  std::uint64_t seed = 0;
  Strategy strategy;
  MpiWeighting mpi_weighting = MpiWeighting::weighted;
  MpiFunctional mpi_functional = MpiFunctional::minimal_tail;
  double success_threshold = 0.975;
  bool fb_weighted = false;
  EffectFunctional effect = EffectFunctional::profile_difference;
  PsPopulation ps_population = PsPopulation::current_all;

  AnalysisOptions analysis_options() const {
    AnalysisOptions o;
    o.strategy = strategy;
    o.draws = draws;
    o.burn_in = burn_in;
    o.calibration.weighting = mpi_weighting;
    o.calibration.functional = mpi_functional;
    o.fb_weighted = fb_weighted;
    o.effect = effect;
    o.ps_population = ps_population;
    return o;
  }

  const std::vector<std::string>& ps_columns() const {
    return ps_covariate_columns ? *ps_covariate_columns : covariate_columns;
  }
};

inline const char* to_string(MpiWeighting w) { return w == MpiWeighting::weighted ? "weighted" : "raw"; }
inline const char* to_string(MpiFunctional f) {
  return f == MpiFunctional::minimal_tail ? "minimal_tail" : "level_set";
}
inline const char* to_string(EffectFunctional e) {
  return e == EffectFunctional::profile_difference ? "profile" : "intercept";
}
inline const char* to_string(PsPopulation p) {
  return p == PsPopulation::current_all ? "current" : "controls";
}

namespace detail {

template <class T>
T get_field(const nlohmann::json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(std::string("config: field '") + key + "' is missing or has the wrong type");
  }
}

inline std::string get_choice(const nlohmann::json& j, const char* key, std::initializer_list<const char*> allowed) {
  const auto value = get_field<std::string>(j, key);
  for (const char* a : allowed) {
    if (value == a) return value;
  }
  std::string msg = std::string("config: '") + key + "' must be one of";
  for (const char* a : allowed) msg += std::string(" ") + a;
  throw ValidationError(msg + " (got '" + value + "')");
}

}  // namespace detail

inline AnalysisConfig parse_config(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("config: top level must be a JSON object");
  static const std::set<std::string> kKnown = {
      "outcome_column", "treatment_column", "source_column",  "covariate_columns",
      "ps_covariate_columns", "draws",      "burn_in",        "seed",
      "strategy",       "mpi_weighting",    "mpi_functional", "success_threshold",
      "fb_weighted",    "effect",           "ps_population"};
  std::string unknown;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!kKnown.count(it.key())) unknown += (unknown.empty() ? "" : ", ") + it.key();
  }
  if (!unknown.empty()) throw ValidationError("config: unknown key(s): " + unknown);

  AnalysisConfig c;
  c.outcome_column = detail::get_field<std::string>(j, "outcome_column");
  c.treatment_column = detail::get_field<std::string>(j, "treatment_column");
  c.source_column = detail::get_field<std::string>(j, "source_column");
  c.covariate_columns = detail::get_field<std::vector<std::string>>(j, "covariate_columns");
  if (j.contains("ps_covariate_columns")) {
    c.ps_covariate_columns = detail::get_field<std::vector<std::string>>(j, "ps_covariate_columns");
  }
  if (!j.contains("seed")) throw ValidationError("config: 'seed' is required");
  c.seed = detail::get_field<std::uint64_t>(j, "seed");
  if (j.contains("draws")) c.draws = detail::get_field<int>(j, "draws");
  if (j.contains("burn_in")) c.burn_in = detail::get_field<int>(j, "burn_in");
  if (c.draws < 1) throw ValidationError("config: draws must be at least 1");
  if (c.burn_in < 0) throw ValidationError("config: burn_in must be nonnegative");
  if (j.contains("strategy")) c.strategy = Strategy::parse(detail::get_field<std::string>(j, "strategy"));
  if (j.contains("mpi_weighting")) {
    c.mpi_weighting = detail::get_choice(j, "mpi_weighting", {"weighted", "raw"}) == "weighted"
                          ? MpiWeighting::weighted
                          : MpiWeighting::raw;
  }
  if (j.contains("mpi_functional")) {
    c.mpi_functional = detail::get_choice(j, "mpi_functional", {"minimal_tail", "level_set"}) == "minimal_tail"
                           ? MpiFunctional::minimal_tail
                           : MpiFunctional::level_set;
  }
  if (j.contains("success_threshold")) c.success_threshold = detail::get_field<double>(j, "success_threshold");
  if (!(c.success_threshold > 0.5 && c.success_threshold < 1.0)) {
    throw ValidationError("config: success_threshold must lie in (0.5, 1)");
  }
  if (j.contains("fb_weighted")) c.fb_weighted = detail::get_field<bool>(j, "fb_weighted");
  if (j.contains("effect")) {
    c.effect = detail::get_choice(j, "effect", {"profile", "intercept"}) == "profile"
                   ? EffectFunctional::profile_difference
                   : EffectFunctional::intercept_difference;
  }
  if (j.contains("ps_population")) {
    c.ps_population = detail::get_choice(j, "ps_population", {"current", "controls"}) == "current"
                          ? PsPopulation::current_all
                          : PsPopulation::current_controls;
  }
  return c;
}

inline nlohmann::json to_json(const AnalysisConfig& c) {
  nlohmann::json j = {
      {"outcome_column", c.outcome_column},
      {"treatment_column", c.treatment_column},
      {"source_column", c.source_column},
      {"covariate_columns", c.covariate_columns},
      {"draws", c.draws},
      {"burn_in", c.burn_in},
      {"seed", c.seed},
      {"strategy", c.strategy.label()},
      {"mpi_weighting", to_string(c.mpi_weighting)},
      {"mpi_functional", to_string(c.mpi_functional)},
      {"success_threshold", c.success_threshold},
      {"fb_weighted", c.fb_weighted},
      {"effect", to_string(c.effect)},
      {"ps_population", to_string(c.ps_population)},
  };
  if (c.ps_covariate_columns) j["ps_covariate_columns"] = *c.ps_covariate_columns;
  return j;
}

}  // namespace borrowkit::io
