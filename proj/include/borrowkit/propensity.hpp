#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "borrowkit/error.hpp"

namespace borrowkit {

/// Baseline covariates (no intercept column) with the study-membership label
/// per row: 1 = current study, 0 = external source.
struct CovariateMatrix {
  Eigen::MatrixXd covariates;
  Eigen::VectorXi membership;

  Eigen::Index rows() const noexcept { return covariates.rows(); }
  Eigen::Index cols() const noexcept { return covariates.cols(); }

  /// Stacks a current block over an external block.
  static CovariateMatrix stack(const Eigen::MatrixXd& current, const Eigen::MatrixXd& external) {
    if (current.cols() != external.cols()) {
      throw DimensionMismatch("current and external covariate blocks differ in column count");
    }
    CovariateMatrix out;
    out.covariates.resize(current.rows() + external.rows(), current.cols());
    out.covariates.topRows(current.rows()) = current;
    out.covariates.bottomRows(external.rows()) = external;
    out.membership.resize(out.covariates.rows());
    out.membership.head(current.rows()).setOnes();
    out.membership.tail(external.rows()).setZero();
    return out;
  }
};

/// Clipped PS-odds weights for the external subjects and their sum.
struct WeightVector {
  Eigen::VectorXd w;
  double ess = 0.0;

  static WeightVector unit(Eigen::Index n) {
    return {Eigen::VectorXd::Ones(n), static_cast<double>(n)};
  }
};

struct LogisticOptions {
  int max_iter = 100;
  double tol = 1e-8;
};

namespace detail {

inline double logistic(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

inline Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& covariates) {
  Eigen::MatrixXd x(covariates.rows(), covariates.cols() + 1);
  x.col(0).setOnes();
  x.rightCols(covariates.cols()) = covariates;
  return x;
}

// True when every row of some label class has a fitted probability within
// 1e-10 of its own label.
inline bool class_saturated(const Eigen::VectorXd& p, const Eigen::VectorXi& z) {
  bool ones = true;
  bool zeros = true;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (z(i) == 1 && p(i) < 1.0 - 1e-10) ones = false;
    if (z(i) == 0 && p(i) > 1e-10) zeros = false;
  }
  return ones || zeros;
}

}  // namespace detail

/// Maximum-likelihood logistic regression of membership on covariates by
/// iteratively reweighted least squares. Returns (intercept, slopes...).
inline Eigen::VectorXd fit_logistic(const CovariateMatrix& data, const LogisticOptions& options = {}) {
  const Eigen::Index n = data.rows();
  if (data.membership.size() != n) throw DimensionMismatch("membership length differs from row count");
  if (n < 2) throw TooFewRows("fit_logistic needs at least two rows");
  if (!data.covariates.allFinite()) throw ValidationError("covariates contain non-finite values");
  Eigen::Index n_current = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int z = data.membership(i);
    if (z != 0 && z != 1) throw ValidationError("membership labels must be 0 or 1");
    n_current += z;
  }
  if (n_current == 0 || n_current == n) {
    throw Separation("degenerate labels: only one membership class present");
  }

  const Eigen::MatrixXd x = detail::with_intercept(data.covariates);
  const Eigen::Index k = x.cols();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < k) throw SingularDesign("propensity design matrix is rank deficient");

  const Eigen::VectorXd z = data.membership.cast<double>();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd p(n);
  for (int iter = 0; iter < options.max_iter; ++iter) {
    const Eigen::VectorXd eta = x * beta;
    for (Eigen::Index i = 0; i < n; ++i) p(i) = detail::logistic(eta(i));
    if (iter > 0 && detail::class_saturated(p, data.membership)) {
      throw Separation("fitted propensity scores saturate: data are separated");
    }
    const Eigen::VectorXd w = p.cwiseProduct(Eigen::VectorXd::Ones(n) - p);
    const Eigen::MatrixXd hessian = x.transpose() * w.asDiagonal() * x;
    const Eigen::VectorXd gradient = x.transpose() * (z - p);
    Eigen::LLT<Eigen::MatrixXd> llt(hessian);
    if (llt.info() != Eigen::Success) {
      if (detail::class_saturated(p, data.membership)) {
        throw Separation("information matrix collapsed: data are separated");
      }
      throw SingularDesign("logistic information matrix is not invertible");
    }
    const Eigen::VectorXd delta = llt.solve(gradient);
    beta += delta;
    if (!beta.allFinite() || beta.norm() > 1e6) {
      throw Separation("logistic coefficients diverge: data are separated");
    }
    if (delta.cwiseAbs().maxCoeff() < options.tol) return beta;
  }
  throw NonConvergence("logistic regression did not converge within " +
                       std::to_string(options.max_iter) + " iterations");
}

/// e(x) = P(current | x) for each row.
inline Eigen::VectorXd propensity_scores(const Eigen::VectorXd& coefficients,
                                         const Eigen::MatrixXd& covariates) {
  if (coefficients.size() != covariates.cols() + 1) {
    throw DimensionMismatch("coefficient length must equal covariate count + 1");
  }
  const Eigen::VectorXd eta =
      (covariates * coefficients.tail(covariates.cols())).array() + coefficients(0);
  Eigen::VectorXd scores(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) scores(i) = detail::logistic(eta(i));
  return scores;
}

inline Eigen::VectorXd propensity_scores(const Eigen::VectorXd& coefficients,
                                         const CovariateMatrix& data) {
  return propensity_scores(coefficients, data.covariates);
}

/// w_k = min(1, e_k / (1 - e_k)), scores clipped to [1e-12, 1 - 1e-12].
inline WeightVector external_weights(std::span<const double> scores) {
  constexpr double kClip = 1e-12;
  WeightVector out;
  out.w.resize(static_cast<Eigen::Index>(scores.size()));
  double ess = 0.0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    const double e = scores[k];
    if (!(e > 0.0 && e < 1.0)) {
      throw DomainError("external_weights: propensity score must lie strictly inside (0,1)");
    }
    const double clipped = std::clamp(e, kClip, 1.0 - kClip);
    const double w = std::min(1.0, clipped / (1.0 - clipped));
    out.w(static_cast<Eigen::Index>(k)) = w;
    ess += w;
  }
  out.ess = ess;
  return out;
}

inline WeightVector external_weights(const Eigen::VectorXd& scores) {
  return external_weights(std::span<const double>(scores.data(), static_cast<std::size_t>(scores.size())));
}

/// Propensity model output for one current-vs-external comparison.
struct PropensityFit {
  Eigen::VectorXd coefficients;
  Eigen::VectorXd external_scores;
  WeightVector weights;
};

inline PropensityFit fit_external_weights(const Eigen::MatrixXd& current_covariates,
                                          const Eigen::MatrixXd& external_covariates,
                                          const LogisticOptions& options = {}) {
  PropensityFit fit;
  fit.coefficients = fit_logistic(CovariateMatrix::stack(current_covariates, external_covariates), options);
  fit.external_scores = propensity_scores(fit.coefficients, external_covariates);
  fit.weights = external_weights(fit.external_scores);
  return fit;
}

}  // namespace borrowkit
