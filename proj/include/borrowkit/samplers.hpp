#pragma once

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "borrowkit/error.hpp"
#include "borrowkit/rng.hpp"

namespace borrowkit {

/// Gamma(shape, rate = 1) by Marsaglia-Tsang squeeze/rejection.
/// Shapes below one are boosted to shape + 1 and rescaled by U^(1/shape).
inline double sample_standard_gamma(double shape, RngStream& rng) {
  detail::require_domain(shape > 0.0 && std::isfinite(shape), "sample_gamma: shape must be positive");
  if (shape < 1.0) {
    const double g = sample_standard_gamma(shape + 1.0, rng);
    return g * std::pow(rng.uniform(), 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

inline double sample_gamma(double shape, double rate, RngStream& rng) {
  detail::require_domain(rate > 0.0, "sample_gamma: rate must be positive");
  return sample_standard_gamma(shape, rng) / rate;
}

/// Draw with density proportional to x^(-shape-1) exp(-scale/x).
inline double sample_inverse_gamma(double shape, double scale, RngStream& rng) {
  detail::require_domain(shape > 0.0 && scale > 0.0,
                         "sample_inverse_gamma: shape and scale must be positive");
  return scale / sample_standard_gamma(shape, rng);
}

/// Square-root factor F (F F' = covariance) of a symmetric PSD matrix.
///
/// Uses a pivoted LDL' decomposition so semidefinite and all-zero matrices
/// are accepted; a zero covariance yields a zero factor.
class GaussianFactor {
 public:
  explicit GaussianFactor(const Eigen::MatrixXd& covariance) {
    if (covariance.rows() != covariance.cols()) {
      throw DimensionMismatch("covariance must be square");
    }
    const Eigen::Index q = covariance.rows();
    const double scale = q > 0 ? covariance.diagonal().cwiseAbs().maxCoeff() : 0.0;
    if (!covariance.allFinite()) throw InvalidCovariance("covariance has non-finite entries");
    if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + scale)) {
      throw InvalidCovariance("covariance is not symmetric");
    }
    factor_ = Eigen::MatrixXd::Zero(q, q);
    if (q == 0 || scale == 0.0) return;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(covariance);
    if (ldlt.info() != Eigen::Success) {
      throw InvalidCovariance("covariance factorization failed");
    }
    Eigen::VectorXd d = ldlt.vectorD();
    for (Eigen::Index i = 0; i < q; ++i) {
      if (d(i) < -1e-12 * scale) throw InvalidCovariance("covariance is not positive semidefinite");
      d(i) = d(i) > 0.0 ? std::sqrt(d(i)) : 0.0;
    }
    const Eigen::MatrixXd lower = ldlt.matrixL();
    factor_ = ldlt.transpositionsP().transpose() * (lower * d.asDiagonal());
  }

  const Eigen::MatrixXd& matrix() const noexcept { return factor_; }
  Eigen::Index dim() const noexcept { return factor_.rows(); }

  /// mean + scale * F z with z i.i.d. standard normal.
  Eigen::VectorXd draw(const Eigen::VectorXd& mean, RngStream& rng, double scale = 1.0) const {
    Eigen::VectorXd z(dim());
    for (Eigen::Index i = 0; i < dim(); ++i) z(i) = rng.normal();
    return mean + scale * (factor_ * z);
  }

 private:
  Eigen::MatrixXd factor_;
};

inline Eigen::VectorXd sample_mvn(const Eigen::VectorXd& mean, const Eigen::MatrixXd& covariance,
                                  RngStream& rng) {
  if (mean.size() != covariance.rows()) {
    throw DimensionMismatch("sample_mvn: mean and covariance sizes differ");
  }
  return GaussianFactor(covariance).draw(mean, rng);
}

}  // namespace borrowkit
