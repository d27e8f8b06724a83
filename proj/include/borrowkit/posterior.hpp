#pragma once

#include <cmath>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "borrowkit/error.hpp"
#include "borrowkit/mpi.hpp"
#include "borrowkit/rng.hpp"
#include "borrowkit/samplers.hpp"
#include "borrowkit/summaries.hpp"

namespace borrowkit {

/// sigma2 ~ IG(shape, scale), then theta | sigma2 ~ N(mean, sigma2 * unit_covariance).
struct ConjugatePosterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd unit_covariance;
  double shape = 0.0;
  double scale = 0.0;
};

struct PosteriorDraws {
  Eigen::MatrixXd theta;  // n_draws x q
  Eigen::VectorXd sigma2;

  Eigen::Index size() const noexcept { return sigma2.size(); }
};

namespace detail {

inline Eigen::MatrixXd invert_spd(const Eigen::MatrixXd& m, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    throw InvalidCovariance(std::string(what) + ": precision matrix is not positive definite");
  }
  Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(m.rows(), m.cols()));
  return 0.5 * (inv + inv.transpose());
}

}  // namespace detail

/// Treatment arm under the 1/sigma2 reference prior:
/// sigma2 ~ IG((n-1)/2, (n-1) S^2 / 2), theta | sigma2 ~ N(theta_hat, sigma2 (X'X)^-1).
inline ConjugatePosterior treatment_posterior(const ArmSummary& s) {
  ConjugatePosterior p;
  p.mean = s.theta_hat;
  p.unit_covariance = detail::invert_spd(s.xtx, "treatment_posterior");
  p.shape = 0.5 * static_cast<double>(s.n - 1);
  p.scale = 0.5 * static_cast<double>(s.n - 1) * s.s2;
  return p;
}

/// Control arm under the PS-weighted borrowing-by-parts power prior.
///
///   P     = X_c'X_c + a1 X_e'W X_e
///   mean  = P^-1 (X_c'X_c theta_c + a1 X_e'W X_e theta_w)
///   shape = (n_c + a1 + (ess - 1) a2) / 2
///   scale = ((n_c - 1) S_c^2 + (ess - 1) a2 S_w^2) / 2
///
/// A zero power parameter removes its external terms exactly, so with
/// (0, 0) the result is bitwise independent of the external summary.
inline ConjugatePosterior control_posterior(const ArmSummary& current,
                                            const std::optional<WeightedSummary>& external,
                                            const PowerParams& params) {
  params.validate();
  if (params.borrows() && !external) {
    throw EssTooSmall("borrowing requested but no usable external summary");
  }
  ConjugatePosterior p;
  const double n_c = static_cast<double>(current.n);
  if (params.a1 > 0.0) {
    if (external->xtwx.rows() != current.xtx.rows()) {
      throw DimensionMismatch("current and external designs differ in column count");
    }
    const Eigen::MatrixXd precision = current.xtx + params.a1 * external->xtwx;
    p.unit_covariance = detail::invert_spd(precision, "control_posterior");
    p.mean = p.unit_covariance *
             (current.xtx * current.theta_hat + params.a1 * (external->xtwx * external->theta_hat_w));
  } else {
    p.unit_covariance = detail::invert_spd(current.xtx, "control_posterior");
    p.mean = current.theta_hat;
  }
  p.shape = 0.5 * (n_c + params.a1);
  p.scale = 0.5 * (n_c - 1.0) * current.s2;
  if (params.a2 > 0.0) {
    p.shape += 0.5 * (external->ess - 1.0) * params.a2;
    p.scale += 0.5 * (external->ess - 1.0) * params.a2 * external->s2_w;
  }
  return p;
}

/// Independent draws; the first burn_in are generated and discarded.
inline PosteriorDraws sample_posterior(const ConjugatePosterior& post, int n_draws, int burn_in,
                                       RngStream& rng) {
  if (n_draws < 1) throw DomainError("n_draws must be at least 1");
  if (burn_in < 0) throw DomainError("burn_in must be nonnegative");
  detail::require_domain(post.shape > 0.0 && post.scale > 0.0,
                         "posterior inverse-gamma parameters must be positive");
  const GaussianFactor factor(post.unit_covariance);
  PosteriorDraws out;
  out.theta.resize(n_draws, post.mean.size());
  out.sigma2.resize(n_draws);
  for (int i = -burn_in; i < n_draws; ++i) {
    const double sigma2 = sample_inverse_gamma(post.shape, post.scale, rng);
    const Eigen::VectorXd theta = factor.draw(post.mean, rng, std::sqrt(sigma2));
    if (i >= 0) {
      out.sigma2(i) = sigma2;
      out.theta.row(i) = theta.transpose();
    }
  }
  return out;
}

inline PosteriorDraws sample_treatment_posterior(const ArmData& treatment, int n_draws, int burn_in,
                                                 RngStream& rng) {
  return sample_posterior(treatment_posterior(arm_summary(treatment)), n_draws, burn_in, rng);
}

inline PosteriorDraws sample_control_posterior(const ArmData& current, const ArmData& external,
                                               const WeightVector& weights, const PowerParams& params,
                                               int n_draws, int burn_in, RngStream& rng) {
  params.validate();
  const ArmSummary cur = arm_summary(current);
  std::optional<WeightedSummary> ext;
  if (params.borrows()) ext = weighted_summary(external, weights);
  return sample_posterior(control_posterior(cur, ext, params), n_draws, burn_in, rng);
}

}  // namespace borrowkit
