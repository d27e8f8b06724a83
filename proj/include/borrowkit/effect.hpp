#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "borrowkit/error.hpp"
#include "borrowkit/mpi.hpp"
#include "borrowkit/posterior.hpp"

namespace borrowkit {

struct EffectSummary {
  double mean = 0.0;
  double sd = 0.0;
  double lower95 = 0.0;
  double upper95 = 0.0;
  double width = 0.0;
  double prob_positive = 0.0;
  double ess_borrowed = 0.0;
  PowerParams power_params;
};

/// Equal-tailed interval from type-7 quantiles. The upper bound mirrors the
/// lower bound's interpolation so negating the sample reflects the interval exactly.
inline std::pair<double, double> equal_tailed_interval(std::vector<double> values, double level = 0.95) {
  if (values.empty()) throw TooFewRows("equal_tailed_interval of an empty sample");
  detail::require_domain(level > 0.0 && level < 1.0, "interval level must lie in (0,1)");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n == 1) return {values[0], values[0]};
  const double h = static_cast<double>(n - 1) * (1.0 - level) / 2.0;
  const auto j = static_cast<std::size_t>(std::floor(h));
  const double frac = h - static_cast<double>(j);
  const std::size_t j_next = std::min(j + 1, n - 1);
  const double lo = (1.0 - frac) * values[j] + frac * values[j_next];
  const double hi = (1.0 - frac) * values[n - 1 - j] + frac * values[n - 1 - j_next];
  return {lo, hi};
}

/// Per-draw effect profile'(theta_t - theta_c) summarized by mean, SD,
/// equal-tailed 95% interval and P(effect > 0).
inline EffectSummary effect_summary(const PosteriorDraws& treatment, const PosteriorDraws& control,
                                    const Eigen::VectorXd& profile, double ess_borrowed,
                                    const PowerParams& params) {
  if (treatment.size() != control.size()) throw DimensionMismatch("arms have different draw counts");
  if (treatment.theta.cols() != control.theta.cols() || profile.size() != treatment.theta.cols()) {
    throw DimensionMismatch("profile and coefficient dimensions differ");
  }
  const Eigen::Index m = treatment.size();
  if (m == 0) throw TooFewRows("effect_summary needs at least one draw");
  const Eigen::VectorXd delta = (treatment.theta - control.theta) * profile;
  EffectSummary out;
  double sum = 0.0;
  Eigen::Index positive = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    sum += delta(i);
    if (delta(i) > 0.0) ++positive;
  }
  out.mean = sum / static_cast<double>(m);
  double ss = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) ss += (delta(i) - out.mean) * (delta(i) - out.mean);
  out.sd = m > 1 ? std::sqrt(ss / static_cast<double>(m - 1)) : 0.0;
  auto [lo, hi] = equal_tailed_interval(std::vector<double>(delta.data(), delta.data() + m));
  out.lower95 = lo;
  out.upper95 = hi;
  out.width = hi - lo;
  out.prob_positive = static_cast<double>(positive) / static_cast<double>(m);
  out.ess_borrowed = ess_borrowed;
  out.power_params = params;
  return out;
}

}  // namespace borrowkit
