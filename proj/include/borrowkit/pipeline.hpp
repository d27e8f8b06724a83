#pragma once

#include <cmath>
#include <cstdio>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "borrowkit/effect.hpp"
#include "borrowkit/error.hpp"
#include "borrowkit/mpi.hpp"
#include "borrowkit/posterior.hpp"
#include "borrowkit/propensity.hpp"
#include "borrowkit/rng.hpp"
#include "borrowkit/summaries.hpp"

namespace borrowkit {

/// Data-adaptive PSW-BPP, or fixed borrowing with preset power parameters.
struct Strategy {
  enum class Kind { psw_bpp, fixed };
  Kind kind = Kind::psw_bpp;
  PowerParams fixed;

  static Strategy psw_bpp() { return {}; }
  static Strategy fixed_at(double a1, double a2) {
    Strategy s{Kind::fixed, {a1, a2}};
    s.fixed.validate();
    return s;
  }

  bool is_fixed() const noexcept { return kind == Kind::fixed; }

  /// "psw-bpp" or "fixed:a1/a2" (no commas, so it is safe inside CSV).
  std::string label() const {
    if (kind == Kind::psw_bpp) return "psw-bpp";
    char buf[64];
    std::snprintf(buf, sizeof buf, "fixed:%g/%g", fixed.a1, fixed.a2);
    return buf;
  }

  /// Accepts "psw-bpp", "fixed:a1,a2" and "fixed:a1/a2".
  static Strategy parse(const std::string& text) {
    if (text == "psw-bpp" || text == "psw_bpp") return psw_bpp();
    const std::string prefix = "fixed:";
    if (text.rfind(prefix, 0) == 0) {
      std::string rest = text.substr(prefix.size());
      const auto sep = rest.find_first_of(",/");
      if (sep == std::string::npos) throw ValidationError("strategy '" + text + "': expected fixed:a1,a2");
      try {
        std::size_t used1 = 0, used2 = 0;
        const std::string s1 = rest.substr(0, sep);
        const std::string s2 = rest.substr(sep + 1);
        const double a1 = std::stod(s1, &used1);
        const double a2 = std::stod(s2, &used2);
        if (used1 != s1.size() || used2 != s2.size()) throw std::invalid_argument("trailing");
        if (!(a1 >= 0 && a1 <= 1 && a2 >= 0 && a2 <= 1)) {
          throw ValidationError("strategy '" + text + "': power parameters must lie in [0,1]");
        }
        return fixed_at(a1, a2);
      } catch (const std::logic_error&) {
        throw ValidationError("strategy '" + text + "': could not parse power parameters");
      }
    }
    throw ValidationError("unknown strategy '" + text + "' (expected psw-bpp or fixed:a1,a2)");
  }
};

/// Treatment-effect functional applied to each pair of coefficient draws.
enum class EffectFunctional { profile_difference, intercept_difference };

/// Which current-study subjects enter the propensity model against the external subjects.
enum class PsPopulation { current_all, current_controls };

struct AnalysisOptions {
  Strategy strategy;
  int draws = 5000;
  int burn_in = 2000;
  CalibrationOptions calibration;
  bool fb_weighted = false;  // fixed borrowing with PS weights instead of unit weights
  EffectFunctional effect = EffectFunctional::profile_difference;
  PsPopulation ps_population = PsPopulation::current_all;
  LogisticOptions logistic;
};

/// Everything one analysis consumes. Outcome designs carry an intercept
/// column; propensity covariates do not.
struct TrialInput {
  ArmData treatment;
  ArmData control;
  ArmData external;
  Eigen::MatrixXd ps_treatment;
  Eigen::MatrixXd ps_control;
  Eigen::MatrixXd ps_external;
};

/// Propensity weighting, external summary and power parameters for one trial.
struct BorrowingPlan {
  std::optional<PropensityFit> propensity;
  WeightVector weights;
  std::optional<WeightedSummary> external;
  Calibration calibration;
  PowerParams params;
  bool guard_applied = false;  // too little external information; borrowing forced off
};

struct TrialAnalysis {
  EffectSummary effect;
  BorrowingPlan plan;
  ConjugatePosterior treatment_posterior;
  ConjugatePosterior control_posterior;
};

/// Stream children used by analyze_trial. Borrowing and no-borrowing runs on
/// the same stream share their Monte Carlo noise.
inline constexpr std::uint64_t kTreatmentDrawStream = 1;
inline constexpr std::uint64_t kControlDrawStream = 2;

namespace detail {

inline Eigen::MatrixXd vstack(const Eigen::MatrixXd& top, const Eigen::MatrixXd& bottom) {
  if (top.cols() != bottom.cols()) throw DimensionMismatch("vstack: column counts differ");
  Eigen::MatrixXd out(top.rows() + bottom.rows(), top.cols());
  out.topRows(top.rows()) = top;
  out.bottomRows(bottom.rows()) = bottom;
  return out;
}

}  // namespace detail

inline BorrowingPlan plan_borrowing(const TrialInput& input, const ArmSummary& control,
                                    const AnalysisOptions& options) {
  BorrowingPlan plan;
  const Eigen::Index n_e = input.external.rows();
  const bool use_ps = !options.strategy.is_fixed() || options.fb_weighted;
  plan.weights = WeightVector::unit(n_e);
  if (n_e >= 2) {
    if (use_ps) {
      const Eigen::MatrixXd current_ps = options.ps_population == PsPopulation::current_all
                                             ? detail::vstack(input.ps_treatment, input.ps_control)
                                             : input.ps_control;
      plan.propensity = fit_external_weights(current_ps, input.ps_external, options.logistic);
      plan.weights = plan.propensity->weights;
    }
    try {
      plan.external = weighted_summary(input.external, plan.weights);
    } catch (const EssTooSmall&) {
    } catch (const RankDeficient&) {
      // Too few (effectively weighted) external rows to identify the coefficients.
    }
  }
  plan.calibration = calibrate_power_params(control, plan.external, options.calibration);
  plan.guard_applied = plan.calibration.report.degenerate;
  if (plan.guard_applied) {
    plan.params = {};
    plan.external.reset();
  } else {
    plan.params = options.strategy.is_fixed() ? options.strategy.fixed : plan.calibration.params;
  }
  return plan;
}

inline TrialAnalysis analyze_trial(const TrialInput& input, const AnalysisOptions& options,
                                   const RngStream& rng) {
  if (options.draws < 1) throw DomainError("draws must be at least 1");
  if (options.burn_in < 0) throw DomainError("burn_in must be nonnegative");
  TrialAnalysis out;
  const ArmSummary treated = arm_summary(input.treatment);
  const ArmSummary control = arm_summary(input.control);
  out.plan = plan_borrowing(input, control, options);

  out.treatment_posterior = treatment_posterior(treated);
  out.control_posterior = control_posterior(control, out.plan.external, out.plan.params);

  RngStream treatment_rng = rng.derive(kTreatmentDrawStream);
  RngStream control_rng = rng.derive(kControlDrawStream);
  const PosteriorDraws t_draws =
      sample_posterior(out.treatment_posterior, options.draws, options.burn_in, treatment_rng);
  const PosteriorDraws c_draws =
      sample_posterior(out.control_posterior, options.draws, options.burn_in, control_rng);

  Eigen::VectorXd profile;
  if (options.effect == EffectFunctional::profile_difference) {
    profile = pooled_profile(input.treatment.x, input.control.x);
  } else {
    profile = Eigen::VectorXd::Unit(input.control.cols(), 0);
  }
  const double ess_borrowed = out.plan.params.borrows() ? out.plan.weights.ess : 0.0;
  out.effect = effect_summary(t_draws, c_draws, profile, ess_borrowed, out.plan.params);
  return out;
}

}  // namespace borrowkit
