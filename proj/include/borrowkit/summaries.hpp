#pragma once

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "borrowkit/error.hpp"
#include "borrowkit/propensity.hpp"

namespace borrowkit {

/// Design matrix (intercept column first) and outcomes for one arm.
struct ArmData {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;

  Eigen::Index rows() const noexcept { return x.rows(); }
  Eigen::Index cols() const noexcept { return x.cols(); }
};

/// Least-squares summary of one arm. Residual variance uses divisor n - 1.
struct ArmSummary {
  Eigen::VectorXd theta_hat;
  double s2 = 0.0;
  Eigen::Index n = 0;
  Eigen::MatrixXd xtx;
  double ybar = 0.0;
  double sc2_raw = 0.0;  // sample variance of the raw outcomes
};

/// PS-weighted least-squares summary of the external controls.
struct WeightedSummary {
  Eigen::VectorXd theta_hat_w;
  double s2_w = 0.0;  // weighted residual variance, divisor ess - 1
  double ess = 0.0;
  Eigen::MatrixXd xtwx;
  double ybar_w = 0.0;
  double ybar_raw = 0.0;
  double s2_raw = 0.0;  // unweighted sample variance of the raw outcomes
  Eigen::Index n_raw = 0;
};

namespace detail {

inline void check_arm_shape(const ArmData& data) {
  if (data.x.rows() != data.y.size()) {
    throw DimensionMismatch("design matrix rows (" + std::to_string(data.x.rows()) +
                            ") differ from outcome length (" + std::to_string(data.y.size()) + ")");
  }
  if (data.x.cols() == 0) throw DimensionMismatch("design matrix has no columns");
}

inline void check_full_rank(const Eigen::MatrixXd& x, const char* what) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < x.cols()) throw RankDeficient(std::string(what) + ": design matrix is rank deficient");
}

inline double sample_variance(const Eigen::VectorXd& y) {
  if (y.size() < 2) return 0.0;
  const double mean = y.mean();
  return (y.array() - mean).square().sum() / static_cast<double>(y.size() - 1);
}

}  // namespace detail

inline ArmSummary arm_summary(const ArmData& data) {
  detail::check_arm_shape(data);
  const Eigen::Index n = data.rows();
  const Eigen::Index q = data.cols();
  if (n < q + 1) {
    throw TooFewRows("arm_summary needs n >= q + 1 (n = " + std::to_string(n) +
                     ", q = " + std::to_string(q) + ")");
  }
  detail::check_full_rank(data.x, "arm_summary");
  ArmSummary s;
  s.n = n;
  s.xtx = data.x.transpose() * data.x;
  s.theta_hat = s.xtx.ldlt().solve(data.x.transpose() * data.y);
  const Eigen::VectorXd resid = data.y - data.x * s.theta_hat;
  s.s2 = resid.squaredNorm() / static_cast<double>(n - 1);
  s.ybar = data.y.mean();
  s.sc2_raw = detail::sample_variance(data.y);
  return s;
}

inline WeightedSummary weighted_summary(const ArmData& data, const WeightVector& weights) {
  detail::check_arm_shape(data);
  const Eigen::Index n = data.rows();
  if (weights.w.size() != n) throw DimensionMismatch("weight vector length differs from external rows");
  for (Eigen::Index k = 0; k < n; ++k) {
    if (!(weights.w(k) >= 0.0 && weights.w(k) <= 1.0)) {
      throw DomainError("external weights must lie in [0,1]");
    }
  }
  const double ess = weights.w.sum();
  if (!(ess > 1.0)) {
    throw EssTooSmall("effective external sample size " + std::to_string(ess) +
                      " <= 1: weighted residual variance undefined");
  }
  const Eigen::MatrixXd wx = weights.w.asDiagonal() * data.x;
  WeightedSummary s;
  s.ess = ess;
  s.n_raw = n;
  s.xtwx = data.x.transpose() * wx;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(s.xtwx);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(weights.w.cwiseSqrt().asDiagonal() * data.x);
  if (qr.rank() < data.cols()) throw RankDeficient("weighted_summary: weighted design is rank deficient");
  s.theta_hat_w = ldlt.solve(wx.transpose() * data.y);
  const Eigen::VectorXd resid = data.y - data.x * s.theta_hat_w;
  s.s2_w = weights.w.dot(resid.cwiseProduct(resid)) / (ess - 1.0);
  s.ybar_w = weights.w.dot(data.y) / ess;
  s.ybar_raw = data.y.mean();
  s.s2_raw = detail::sample_variance(data.y);
  return s;
}

/// Column means of a design matrix; with an intercept column the first entry is 1.
inline Eigen::VectorXd covariate_profile(const Eigen::MatrixXd& x) {
  if (x.rows() == 0) throw TooFewRows("covariate_profile of an empty design");
  return x.colwise().mean().transpose();
}

/// Column means over the union of two designs (the pooled current study).
inline Eigen::VectorXd pooled_profile(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.cols() != b.cols()) throw DimensionMismatch("pooled_profile: column counts differ");
  const double total = static_cast<double>(a.rows() + b.rows());
  if (total == 0) throw TooFewRows("pooled_profile of empty designs");
  return (a.colwise().sum() + b.colwise().sum()).transpose() / total;
}

}  // namespace borrowkit
