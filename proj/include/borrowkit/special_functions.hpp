#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "borrowkit/error.hpp"

namespace borrowkit {

/// log Gamma(x) for x > 0 (Lanczos, g = 7, 9 terms). Reentrant, unlike ::lgamma.
inline double log_gamma(double x) {
  detail::require_domain(x > 0.0 && std::isfinite(x), "log_gamma: x must be positive");
  static constexpr std::array<double, 9> kCoef = {
      0.99999999999980993,  676.5203681218851,    -1259.1392167224028,
      771.32342877765313,   -176.61502916214059,  12.507343278686905,
      -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
  if (x < 0.5) {
    // Reflection keeps accuracy near zero.
    return std::log(std::numbers::pi / std::sin(std::numbers::pi * x)) - log_gamma(1.0 - x);
  }
  const double z = x - 1.0;
  double sum = kCoef[0];
  for (int i = 1; i < 9; ++i) sum += kCoef[i] / (z + i);
  const double t = z + 7.5;
  return 0.5 * std::log(2.0 * std::numbers::pi) + (z + 0.5) * std::log(t) - t + std::log(sum);
}

inline double log_beta(double a, double b) {
  return log_gamma(a) + log_gamma(b) - log_gamma(a + b);
}

namespace detail {

// Continued fraction for I_x(a,b), modified Lentz. Converges fast for x < (a+1)/(a+b+2).
inline double incbeta_cf(double a, double b, double x) {
  constexpr double kTiny = 1e-300;
  constexpr double kEps = 1e-16;
  constexpr int kMaxIter = 20000;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw NonConvergence("incomplete beta continued fraction did not converge");
}

// I_x(a,b) with y = 1 - x supplied separately so callers can pass an exact complement.
inline double incbeta(double a, double b, double x, double y) {
  if (x <= 0.0) return 0.0;
  if (y <= 0.0) return 1.0;
  const double log_front = a * std::log(x) + b * std::log(y) - log_beta(a, b);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return std::exp(log_front) * incbeta_cf(a, b, x) / a;
  }
  return 1.0 - std::exp(log_front) * incbeta_cf(b, a, y) / b;
}

}  // namespace detail

/// Regularized incomplete beta function I_x(a, b).
inline double regularized_incomplete_beta(double x, double a, double b) {
  detail::require_domain(x >= 0.0 && x <= 1.0, "regularized_incomplete_beta: x outside [0,1]");
  detail::require_domain(a > 0.0 && b > 0.0, "regularized_incomplete_beta: a and b must be positive");
  return detail::incbeta(a, b, x, 1.0 - x);
}

inline double student_t_pdf(double t, double dof) {
  detail::require_domain(dof >= 1.0, "student_t_pdf: dof must be >= 1");
  const double log_norm = -0.5 * std::log(dof) - log_beta(0.5, 0.5 * dof);
  return std::exp(log_norm - 0.5 * (dof + 1.0) * std::log1p(t * t / dof));
}

/// CDF of the central Student t distribution.
inline double student_t_cdf(double t, double dof) {
  detail::require_domain(dof >= 1.0, "student_t_cdf: dof must be >= 1");
  if (std::isnan(t)) throw DomainError("student_t_cdf: t is NaN");
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const double t2 = t * t;
  // Lower tail mass P(T < -|t|) = I_{dof/(dof+t^2)}(dof/2, 1/2) / 2.
  const double x = dof / (dof + t2);
  const double y = t2 / (dof + t2);
  const double tail = 0.5 * detail::incbeta(0.5 * dof, 0.5, x, y);
  return t > 0 ? 1.0 - tail : tail;
}

/// Upper tail P(T > t); avoids cancellation for large t.
inline double student_t_sf(double t, double dof) { return student_t_cdf(-t, dof); }

inline double f_pdf(double x, double d1, double d2) {
  detail::require_domain(d1 > 0.0 && d2 > 0.0, "f_pdf: degrees of freedom must be positive");
  detail::require_domain(x >= 0.0, "f_pdf: x must be nonnegative");
  if (std::isinf(x)) return 0.0;
  if (x == 0.0) {
    if (d1 < 2.0) return std::numeric_limits<double>::infinity();
    if (d1 == 2.0) return 1.0;
    return 0.0;
  }
  const double log_pdf = 0.5 * d1 * std::log(d1 / d2) + (0.5 * d1 - 1.0) * std::log(x) -
                         0.5 * (d1 + d2) * std::log1p(d1 * x / d2) - log_beta(0.5 * d1, 0.5 * d2);
  return std::exp(log_pdf);
}

inline double f_cdf(double x, double d1, double d2) {
  detail::require_domain(d1 > 0.0 && d2 > 0.0, "f_cdf: degrees of freedom must be positive");
  detail::require_domain(x >= 0.0, "f_cdf: x must be nonnegative");
  if (std::isinf(x)) return 1.0;
  const double denom = d1 * x + d2;
  return detail::incbeta(0.5 * d1, 0.5 * d2, d1 * x / denom, d2 / denom);
}

/// Upper tail P(X > x) for X ~ F(d1, d2).
inline double f_sf(double x, double d1, double d2) {
  detail::require_domain(d1 > 0.0 && d2 > 0.0, "f_sf: degrees of freedom must be positive");
  detail::require_domain(x >= 0.0, "f_sf: x must be nonnegative");
  if (std::isinf(x)) return 0.0;
  const double denom = d1 * x + d2;
  return detail::incbeta(0.5 * d2, 0.5 * d1, d2 / denom, d1 * x / denom);
}

/// Mode of F(d1, d2); zero when the density is monotone (d1 <= 2).
inline double f_mode(double d1, double d2) {
  detail::require_domain(d1 > 0.0 && d2 > 0.0, "f_mode: degrees of freedom must be positive");
  if (d1 <= 2.0) return 0.0;
  return (d1 - 2.0) / d1 * d2 / (d2 + 2.0);
}

}  // namespace borrowkit
