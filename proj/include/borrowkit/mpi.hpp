#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>

#include "borrowkit/error.hpp"
#include "borrowkit/special_functions.hpp"
#include "borrowkit/summaries.hpp"

namespace borrowkit {

/// How the plausibility of the null is turned into a [0,1] index.
///
/// minimal_tail: the smaller of the two one-sided posterior masses on either
/// side of the null value. Equals 0.5 when the null sits at the posterior
/// median and is what the borrowing strategy uses by default.
///
/// level_set: posterior mass of the region whose density does not exceed the
/// density at the null. Equals 1 when the null sits at the posterior mode.
enum class MpiFunctional { minimal_tail, level_set };

/// Which external quantities enter the indices.
enum class MpiWeighting { weighted, raw };

struct PowerParams {
  double a1 = 0.0;
  double a2 = 0.0;

  void validate() const {
    if (!(a1 >= 0.0 && a1 <= 1.0 && a2 >= 0.0 && a2 <= 1.0)) {
      throw DomainError("power parameters must lie in [0,1]");
    }
  }
  bool borrows() const noexcept { return a1 > 0.0 || a2 > 0.0; }
  friend bool operator==(const PowerParams&, const PowerParams&) = default;
};

struct MpiReport {
  double t_stat = std::numeric_limits<double>::quiet_NaN();
  double mpi_mean = 0.0;
  double f_stat = std::numeric_limits<double>::quiet_NaN();
  double mpi_var = 0.0;
  int dof_mean = 0;
  std::pair<int, int> dof_f{0, 0};
  bool degenerate = false;  // small-external guard fired; indices forced to 0
};

/// (ybar_c - ybar_e) / (S_c / sqrt(n_c)).
inline double mean_t_statistic(double ybar_c, double ybar_e, double s2_c, int n_c) {
  detail::require_domain(s2_c > 0.0 && std::isfinite(s2_c), "mpi_mean: s2_c must be positive");
  detail::require_domain(n_c >= 2, "mpi_mean: n_c must be at least 2");
  return (ybar_c - ybar_e) / (std::sqrt(s2_c) / std::sqrt(static_cast<double>(n_c)));
}

/// Plausibility of equal means under the t_{n_c - 1} posterior of the standardized difference.
inline double mpi_mean(double ybar_c, double ybar_e, double s2_c, int n_c,
                       MpiFunctional functional = MpiFunctional::minimal_tail) {
  const double t0 = mean_t_statistic(ybar_c, ybar_e, s2_c, n_c);
  const double tail = student_t_sf(std::fabs(t0), n_c - 1);
  if (functional == MpiFunctional::minimal_tail) return tail;
  return std::min(1.0, 2.0 * tail);
}

namespace detail {

// Companion point x1 != x0 with f_pdf(x1) == f_pdf(x0) on the other side of the mode.
inline double f_companion_root(double x0, double d1, double d2) {
  const double mode = f_mode(d1, d2);
  const double target = f_pdf(x0, d1, d2);
  double lo, hi;
  if (x0 < mode) {
    if (target == 0.0) return std::numeric_limits<double>::infinity();
    lo = mode;
    hi = 2.0 * mode + 1.0;
    int expansions = 0;
    while (f_pdf(hi, d1, d2) > target) {
      lo = hi;
      hi *= 2.0;
      if (++expansions > 200) throw Error("mpi_variance: could not bracket the companion root");
    }
    // pdf decreasing on [lo, hi]
    for (int i = 0; i < 300 && hi - lo > 1e-15 * hi; ++i) {
      const double mid = 0.5 * (lo + hi);
      (f_pdf(mid, d1, d2) > target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }
  if (target == 0.0) return 0.0;
  lo = 0.0;
  hi = mode;
  if (f_pdf(lo, d1, d2) > target) throw Error("mpi_variance: companion root not bracketed");
  // pdf increasing on [lo, hi]
  for (int i = 0; i < 300 && hi - lo > 1e-15 * mode; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f_pdf(mid, d1, d2) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Plausibility of a unit variance ratio, with s2_e / s2_c referred to F(n_e_dof - 1, n_c - 1).
inline double mpi_variance(double s2_c, double s2_e, int n_c, int n_e_dof,
                           MpiFunctional functional = MpiFunctional::minimal_tail) {
  detail::require_domain(s2_c > 0.0 && std::isfinite(s2_c), "mpi_variance: s2_c must be positive");
  detail::require_domain(s2_e > 0.0 && std::isfinite(s2_e), "mpi_variance: s2_e must be positive");
  detail::require_domain(n_c >= 2 && n_e_dof >= 2, "mpi_variance: sample sizes must be at least 2");
  const double d1 = n_e_dof - 1;
  const double d2 = n_c - 1;
  const double x0 = s2_e / s2_c;
  if (functional == MpiFunctional::minimal_tail) {
    return std::min(f_cdf(x0, d1, d2), f_sf(x0, d1, d2));
  }
  if (d1 <= 2.0) return f_sf(x0, d1, d2);
  const double mode = f_mode(d1, d2);
  if (x0 == mode) return 1.0;
  const double x1 = detail::f_companion_root(x0, d1, d2);
  const double lower = std::min(x0, x1);
  const double upper = std::max(x0, x1);
  return std::clamp(f_cdf(lower, d1, d2) + f_sf(upper, d1, d2), 0.0, 1.0);
}

struct CalibrationOptions {
  MpiWeighting weighting = MpiWeighting::weighted;
  MpiFunctional functional = MpiFunctional::minimal_tail;
};

struct Calibration {
  PowerParams params;
  MpiReport report;
};

/// True when the external evidence is too thin to borrow from.
inline bool small_external(const std::optional<WeightedSummary>& external) {
  return !external || external->n_raw < 2 || external->ess <= 1.0 ||
         std::lround(external->ess) < 2;
}

/// a1 = mPI for the mean part, a2 = mPI for the variance part.
/// With fewer than two external subjects (or ess too small for a weighted
/// variance) both are 0 and the report is marked degenerate.
inline Calibration calibrate_power_params(const ArmSummary& current,
                                          const std::optional<WeightedSummary>& external,
                                          const CalibrationOptions& options = {}) {
  Calibration out;
  const int n_c = static_cast<int>(current.n);
  out.report.dof_mean = n_c - 1;
  if (small_external(external)) {
    out.report.degenerate = true;
    return out;
  }
  const WeightedSummary& ext = *external;
  const bool weighted = options.weighting == MpiWeighting::weighted;

  const double ybar_e = weighted ? ext.ybar_w : ext.ybar_raw;
  out.report.t_stat = mean_t_statistic(current.ybar, ybar_e, current.sc2_raw, n_c);
  out.report.mpi_mean = mpi_mean(current.ybar, ybar_e, current.sc2_raw, n_c, options.functional);

  const double s2_c = weighted ? current.s2 : current.sc2_raw;
  const double s2_e = weighted ? ext.s2_w : ext.s2_raw;
  const int n_e_dof = weighted ? static_cast<int>(std::lround(ext.ess)) : static_cast<int>(ext.n_raw);
  out.report.f_stat = s2_e / s2_c;
  out.report.mpi_var = mpi_variance(s2_c, s2_e, n_c, n_e_dof, options.functional);
  out.report.dof_f = {n_e_dof - 1, n_c - 1};

  out.params = {out.report.mpi_mean, out.report.mpi_var};
  return out;
}

}  // namespace borrowkit
