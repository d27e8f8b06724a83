#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "borrowkit/io/config.hpp"
#include "borrowkit/io/csv.hpp"
#include "borrowkit/rng.hpp"

namespace borrowkit::io {

/// Baseline profile of one cohort in the synthetic dementia-style fixture.
struct CohortProfile {
  int n;
  double p_exposed;
  double p_male;
  double age_mean, age_sd;
  double ravlt_mean, ravlt_sd;
  double apoe4_p0, apoe4_p1;  // P(0 copies), P(1 copy); remainder is 2 copies
  double mmse_mean, mmse_sd;
};

inline CohortProfile current_cohort_profile() {
  return {531, 0.6365, 0.5518, 73.19, 7.36, 14.42, 5.03, 0.5065, 0.3634, 26.95, 2.93};
}

inline CohortProfile external_cohort_profile() {
  return {710, 0.7099, 0.5775, 75.27, 6.73, 13.73, 4.44, 0.5141, 0.3775, 26.88, 2.58};
}

struct FixtureOptions {
  std::uint64_t seed = 20240;
  double effect = 0.17;
  double noise_sd = 0.8;
  bool matched = false;  // external cohort drawn from the current cohort's profile
  CohortProfile current = current_cohort_profile();
  CohortProfile external = external_cohort_profile();
};

/// SYNTHETIC subject-level data. Columns: source, exposure, age, male, ravlt,
/// apoe4, mmse, change. Only external subjects with exposure 0 are controls
/// available for borrowing.
inline CsvTable synthetic_fixture(const FixtureOptions& options) {
  CsvTable table;
  table.header = {"source", "exposure", "age", "male", "ravlt", "apoe4", "mmse", "change"};
  RngStream rng(options.seed, 0);
  auto cohort = [&](const CohortProfile& c, const char* source) {
    for (int i = 0; i < c.n; ++i) {
      const int exposure = rng.uniform() < c.p_exposed ? 1 : 0;
      const int male = rng.uniform() < c.p_male ? 1 : 0;
      const double age = std::round((c.age_mean + c.age_sd * rng.normal()) * 10.0) / 10.0;
      const double ravlt = std::max(0.0, std::round(c.ravlt_mean + c.ravlt_sd * rng.normal()));
      const double u = rng.uniform();
      const int apoe4 = u < c.apoe4_p0 ? 0 : (u < c.apoe4_p0 + c.apoe4_p1 ? 1 : 2);
      const double mmse = std::clamp(std::round(c.mmse_mean + c.mmse_sd * rng.normal()), 18.0, 30.0);
      const double change = options.effect * exposure + 0.02 * (age - 74.0) + 0.04 * (ravlt - 14.0) +
                            0.08 * (mmse - 27.0) - 0.10 * apoe4 + 0.05 * male + options.noise_sd * rng.normal();
      table.rows.push_back({source, std::to_string(exposure), format_exact(age), std::to_string(male),
                            format_exact(ravlt), std::to_string(apoe4), format_exact(mmse),
                            format_fixed(change, 4)});
    }
  };
  cohort(options.current, "current");
  cohort(options.matched ? CohortProfile{options.external.n, options.current.p_exposed, options.current.p_male,
                                         options.current.age_mean, options.current.age_sd,
                                         options.current.ravlt_mean, options.current.ravlt_sd,
                                         options.current.apoe4_p0, options.current.apoe4_p1,
                                         options.current.mmse_mean, options.current.mmse_sd}
                         : options.external,
         "external");
  return table;
}

/// Config matching the columns of synthetic_fixture.
inline AnalysisConfig fixture_config(std::uint64_t seed) {
  AnalysisConfig c;
  c.outcome_column = "change";
  c.treatment_column = "exposure";
  c.source_column = "source";
  c.covariate_columns = {"age", "male", "ravlt", "apoe4", "mmse"};
  c.seed = seed;
  return c;
}

}  // namespace borrowkit::io
