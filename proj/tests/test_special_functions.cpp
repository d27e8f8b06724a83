#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "borrowkit/special_functions.hpp"

using namespace borrowkit;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Densities written from the textbook formulas with std::lgamma, independent of the library.
double t_density(double t, double v) {
  return std::exp(std::lgamma((v + 1) / 2) - std::lgamma(v / 2) - 0.5 * std::log(v * std::numbers::pi) -
                  (v + 1) / 2 * std::log1p(t * t / v));
}

double f_density(double x, double d1, double d2) {
  if (x <= 0) return 0.0;
  return std::exp(0.5 * d1 * std::log(d1 / d2) + (0.5 * d1 - 1) * std::log(x) -
                  0.5 * (d1 + d2) * std::log1p(d1 * x / d2) - std::lgamma(d1 / 2) - std::lgamma(d2 / 2) +
                  std::lgamma((d1 + d2) / 2));
}

double t_cdf_quadrature(double t, double v) {
  boost::math::quadrature::tanh_sinh<double> q;
  const double half = q.integrate([v](double s) { return t_density(s, v); }, 0.0, std::fabs(t));
  return t >= 0 ? 0.5 + half : 0.5 - half;
}

}  // namespace

TEST_CASE("log_gamma agrees with std::lgamma", "[special]") {
  for (double x : {1e-6, 0.1, 0.5, 1.0, 1.5, 2.0, 3.7, 10.0, 55.5, 171.0, 1e4}) {
    CHECK_THAT(log_gamma(x), WithinAbs(std::lgamma(x), 1e-12 * std::max(1.0, std::fabs(std::lgamma(x)))));
  }
  CHECK_THROWS_AS(log_gamma(0.0), DomainError);
}

TEST_CASE("incomplete beta closed form at integer parameters", "[special]") {
  // I_x(2,3) = sum_{j=2}^{4} C(4,j) x^j (1-x)^(4-j)
  CHECK_THAT(regularized_incomplete_beta(0.25, 2, 3), WithinAbs(0.26171875, 1e-14));
  CHECK(regularized_incomplete_beta(0.0, 2, 3) == 0.0);
  CHECK(regularized_incomplete_beta(1.0, 2, 3) == 1.0);
  // I_x(1,b) = 1 - (1-x)^b
  CHECK_THAT(regularized_incomplete_beta(0.3, 1, 7.5), WithinAbs(1 - std::pow(0.7, 7.5), 1e-14));
}

TEST_CASE("incomplete beta reflection", "[special]") {
  for (double a : {0.3, 1.0, 4.5, 60.0}) {
    for (double b : {0.7, 2.0, 13.0}) {
      for (double x : {0.01, 0.2, 0.5, 0.77, 0.999}) {
        CHECK_THAT(regularized_incomplete_beta(x, a, b) + regularized_incomplete_beta(1 - x, b, a),
                   WithinAbs(1.0, 1e-13));
      }
    }
  }
}

TEST_CASE("Student t spot values", "[special]") {
  CHECK_THAT(student_t_cdf(1.0, 9), WithinAbs(t_cdf_quadrature(1.0, 9), 1e-12));
  CHECK_THAT(student_t_cdf(1.0, 9), WithinAbs(0.8282818019310432, 1e-12));
  // Cauchy
  for (double t : {-5.0, -0.3, 0.0, 2.2}) {
    CHECK_THAT(student_t_cdf(t, 1), WithinAbs(0.5 + std::atan(t) / std::numbers::pi, 1e-14));
  }
  CHECK(student_t_cdf(0.0, 17) == 0.5);
  CHECK_THAT(student_t_pdf(0.4, 6), WithinRel(t_density(0.4, 6), 1e-12));
}

TEST_CASE("Student t symmetry and complement", "[special]") {
  for (double v : {1.0, 2.5, 30.0, 500.0}) {
    for (double t : {0.1, 1.0, 3.0, 12.0}) {
      CHECK_THAT(student_t_cdf(-t, v), WithinAbs(student_t_sf(t, v), 0));
      CHECK_THAT(student_t_cdf(t, v) + student_t_sf(t, v), WithinAbs(1.0, 1e-15));
    }
  }
}

TEST_CASE("F distribution spot values and reciprocal identity", "[special]") {
  boost::math::quadrature::tanh_sinh<double> q;
  const double oracle = q.integrate([](double x) { return f_density(x, 9, 49); }, 0.0, 2.0);
  CHECK_THAT(f_cdf(2.0, 9, 49), WithinAbs(oracle, 1e-12));
  for (double x : {0.05, 0.8, 1.0, 3.3}) {
    CHECK_THAT(f_cdf(x, 4, 11), WithinAbs(f_sf(1 / x, 11, 4), 1e-14));
  }
  CHECK(f_cdf(0.0, 3, 5) == 0.0);
  CHECK(f_sf(0.0, 3, 5) == 1.0);
  CHECK_THAT(f_pdf(1.7, 5, 8), WithinRel(f_density(1.7, 5, 8), 1e-12));
}

TEST_CASE("F mode", "[special]") {
  CHECK_THAT(f_mode(10, 20), WithinAbs((8.0 / 10) * (20.0 / 22), 1e-15));
  CHECK(f_mode(2, 20) == 0.0);
}

TEST_CASE("special functions reject bad parameters", "[special]") {
  CHECK_THROWS_AS(student_t_cdf(1.0, 0.5), DomainError);
  CHECK_THROWS_AS(f_cdf(1.0, 0, 4), DomainError);
  CHECK_THROWS_AS(regularized_incomplete_beta(1.5, 2, 2), DomainError);
}
