#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "borrowkit/effect.hpp"
#include "borrowkit/posterior.hpp"
#include "borrowkit/rng.hpp"

using namespace borrowkit;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ArmData random_arm(Eigen::Index n, Eigen::Index q, RngStream& rng, double shift = 0.0) {
  ArmData a;
  a.x.resize(n, q);
  a.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    a.x(i, 0) = 1.0;
    for (Eigen::Index j = 1; j < q; ++j) a.x(i, j) = rng.normal();
    a.y(i) = shift + 0.5 * a.x.row(i).sum() + rng.normal();
  }
  return a;
}

WeightVector random_weights(Eigen::Index n, RngStream& rng) {
  WeightVector w;
  w.w.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) w.w(i) = 0.1 + 0.9 * rng.uniform();
  w.ess = w.w.sum();
  return w;
}

}  // namespace

TEST_CASE("zero power parameters ignore the external summary exactly", "[posterior]") {
  RngStream rng(31, 0);
  const ArmSummary cur = arm_summary(random_arm(40, 3, rng));
  const WeightedSummary ext = weighted_summary(random_arm(300, 3, rng, 2.0), random_weights(300, rng));
  const ConjugatePosterior with = control_posterior(cur, ext, {0, 0});
  const ConjugatePosterior without = control_posterior(cur, std::nullopt, {0, 0});
  CHECK(with.mean == without.mean);
  CHECK(with.unit_covariance == without.unit_covariance);
  CHECK(with.shape == without.shape);
  CHECK(with.scale == without.scale);
  CHECK(with.shape == 20.0);
  CHECK_THAT(with.scale, WithinRel(0.5 * 39 * cur.s2, 1e-15));
}

TEST_CASE("control posterior parameters follow the conjugate update", "[posterior]") {
  RngStream rng(32, 0);
  const ArmSummary cur = arm_summary(random_arm(40, 3, rng));
  const WeightedSummary ext = weighted_summary(random_arm(120, 3, rng, 0.4), random_weights(120, rng));
  const double a1 = 0.35, a2 = 0.6;
  const ConjugatePosterior p = control_posterior(cur, ext, {a1, a2});

  const Eigen::MatrixXd precision = cur.xtx + a1 * ext.xtwx;
  const Eigen::VectorXd mean =
      precision.inverse() * (cur.xtx * cur.theta_hat + a1 * ext.xtwx * ext.theta_hat_w);
  CHECK((p.mean - mean).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((p.unit_covariance - precision.inverse()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THAT(p.shape, WithinRel(0.5 * (40 + a1 + (ext.ess - 1) * a2), 1e-14));
  CHECK_THAT(p.scale, WithinRel(0.5 * (39 * cur.s2 + (ext.ess - 1) * a2 * ext.s2_w), 1e-14));
}

TEST_CASE("the two power parameters act on separate parts", "[posterior]") {
  RngStream rng(33, 0);
  const ArmSummary cur = arm_summary(random_arm(30, 2, rng));
  const WeightedSummary ext = weighted_summary(random_arm(90, 2, rng, 0.4), random_weights(90, rng));
  const ConjugatePosterior base = control_posterior(cur, std::nullopt, {0, 0});
  const ConjugatePosterior mean_only = control_posterior(cur, ext, {0.7, 0});
  const ConjugatePosterior var_only = control_posterior(cur, ext, {0, 0.7});
  CHECK(var_only.mean == base.mean);
  CHECK(var_only.unit_covariance == base.unit_covariance);
  CHECK(mean_only.scale == base.scale);
  CHECK(mean_only.shape == base.shape + 0.35);
  CHECK(mean_only.unit_covariance.trace() < base.unit_covariance.trace());
}

TEST_CASE("more borrowing never widens the unit covariance", "[posterior]") {
  RngStream rng(34, 0);
  const ArmSummary cur = arm_summary(random_arm(30, 3, rng));
  const WeightedSummary ext = weighted_summary(random_arm(200, 3, rng), random_weights(200, rng));
  double prev = INFINITY;
  for (double a : {0.0, 0.2, 0.5, 0.8, 1.0}) {
    const double v = control_posterior(cur, ext, {a, a}).unit_covariance(0, 0);
    CHECK(v <= prev);
    prev = v;
  }
}

TEST_CASE("borrowing without an external summary is an error", "[posterior]") {
  RngStream rng(35, 0);
  const ArmSummary cur = arm_summary(random_arm(20, 2, rng));
  CHECK_THROWS_AS(control_posterior(cur, std::nullopt, {0.5, 0}), EssTooSmall);
  CHECK_THROWS_AS(control_posterior(cur, std::nullopt, {1.2, 0}), DomainError);
}

TEST_CASE("treatment posterior uses the reference-prior form", "[posterior]") {
  RngStream rng(36, 0);
  const ArmSummary s = arm_summary(random_arm(25, 2, rng));
  const ConjugatePosterior p = treatment_posterior(s);
  CHECK(p.mean == s.theta_hat);
  CHECK(p.shape == 12.0);
  CHECK_THAT(p.scale, WithinRel(12.0 * s.s2, 1e-15));
}

TEST_CASE("posterior draws have the analytic moments", "[posterior]") {
  ConjugatePosterior p;
  p.mean = Eigen::Vector2d(1.0, -0.5);
  p.unit_covariance = Eigen::Matrix2d::Identity() * 0.04;
  p.unit_covariance(0, 1) = p.unit_covariance(1, 0) = 0.01;
  p.shape = 12.0;
  p.scale = 22.0;
  RngStream rng(37, 0);
  const PosteriorDraws d = sample_posterior(p, 100000, 100, rng);
  CHECK(d.size() == 100000);
  CHECK_THAT(d.sigma2.mean(), WithinAbs(22.0 / 11.0, 0.02));
  const Eigen::VectorXd m = d.theta.colwise().mean().transpose();
  CHECK((m - p.mean).cwiseAbs().maxCoeff() < 0.005);
  // Var(theta_0) = E[sigma2] * 0.04
  const double var0 = (d.theta.col(0).array() - m(0)).square().mean();
  CHECK_THAT(var0, WithinRel(22.0 / 11.0 * 0.04, 0.03));
}

TEST_CASE("burn-in discards the leading draws", "[posterior]") {
  ConjugatePosterior p{Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1), 3.0, 3.0};
  RngStream a(38, 0), b(38, 0);
  const PosteriorDraws with_burn = sample_posterior(p, 5, 10, a);
  const PosteriorDraws all = sample_posterior(p, 15, 0, b);
  CHECK(with_burn.sigma2 == all.sigma2.tail(5));
  CHECK(with_burn.theta == all.theta.bottomRows(5));
  CHECK_THROWS_AS(sample_posterior(p, 0, 0, a), DomainError);
  CHECK_THROWS_AS(sample_posterior(p, 5, -1, a), DomainError);
}

TEST_CASE("sampling wrappers agree with the summary path", "[posterior]") {
  RngStream rng(39, 0);
  const ArmData cur = random_arm(30, 2, rng);
  const ArmData ext = random_arm(80, 2, rng);
  const WeightVector w = random_weights(80, rng);
  RngStream r1(40, 0), r2(40, 0);
  const PosteriorDraws a = sample_control_posterior(cur, ext, w, {0.3, 0.4}, 50, 5, r1);
  const PosteriorDraws b = sample_posterior(
      control_posterior(arm_summary(cur), weighted_summary(ext, w), {0.3, 0.4}), 50, 5, r2);
  CHECK(a.theta == b.theta);
  CHECK(a.sigma2 == b.sigma2);
}

TEST_CASE("equal-tailed interval uses type-7 quantiles", "[effect]") {
  std::vector<double> v(101);
  for (int i = 0; i <= 100; ++i) v[static_cast<std::size_t>(i)] = i;
  const auto [lo, hi] = equal_tailed_interval(v);
  CHECK_THAT(lo, WithinAbs(2.5, 1e-12));
  CHECK_THAT(hi, WithinAbs(97.5, 1e-12));
  CHECK(equal_tailed_interval({4.0}) == std::pair<double, double>{4.0, 4.0});
  CHECK_THROWS_AS(equal_tailed_interval({}), TooFewRows);
}

TEST_CASE("interval reflects exactly under negation", "[effect]") {
  RngStream rng(41, 0);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> v(static_cast<std::size_t>(2 + rep * 7)), neg;
    for (auto& x : v) x = rng.normal() * 3.0;
    for (double x : v) neg.push_back(-x);
    const auto a = equal_tailed_interval(v);
    const auto b = equal_tailed_interval(neg);
    CHECK(a.first == -b.second);
    CHECK(a.second == -b.first);
  }
}

TEST_CASE("effect summary of known draws", "[effect]") {
  PosteriorDraws t, c;
  t.theta = Eigen::MatrixXd::Zero(4, 2);
  c.theta = Eigen::MatrixXd::Zero(4, 2);
  t.sigma2 = c.sigma2 = Eigen::VectorXd::Ones(4);
  t.theta.col(0) << 1, 2, 3, 4;
  t.theta.col(1) << 0, 0, 0, -10;
  const EffectSummary e = effect_summary(t, c, Eigen::Vector2d(1, 0), 12.5, {0.2, 0.3});
  CHECK(e.mean == 2.5);
  CHECK_THAT(e.sd, WithinAbs(std::sqrt(5.0 / 3.0), 1e-14));
  CHECK(e.prob_positive == 1.0);
  CHECK(e.ess_borrowed == 12.5);
  CHECK(e.power_params == PowerParams{0.2, 0.3});
  CHECK_THAT(e.width, WithinAbs(e.upper95 - e.lower95, 0));
  const EffectSummary slope = effect_summary(t, c, Eigen::Vector2d(0, 1), 0, {});
  CHECK(slope.prob_positive == 0.0);
  CHECK_THROWS_AS(effect_summary(t, c, Eigen::Vector3d(1, 0, 0), 0, {}), DimensionMismatch);
}
