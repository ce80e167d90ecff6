#pragma once

// Variance decomposition for intention-to-treat effects: the systematic
// variance S_dd, bounds on the idiosyncratic variance S_ee, the rank
// correlation sensitivity curve, and R^2_tau intervals.

#include "hetfx/itt.hpp"
#include "hetfx/test_result.hpp"

#include <optional>
#include <vector>

namespace hetfx {

/// Ratio with 0/0 reported as nullopt instead of a number.
struct Interval {
  std::optional<double> lower;
  std::optional<double> upper;
};

enum class R2Status {
  ok,
  upper_undefined,  // S_dd = 0 and the lower S_ee bound = 0
  undefined,        // both endpoints are 0/0
};

std::string_view to_string(R2Status status);

/// num / den, or nullopt when den <= floor (callers only pass num <= den).
std::optional<double> safe_ratio(double num, double den, double floor = 0.0);

/// Variance components below this multiple of the outcome's mean square are
/// rounding noise; a ratio with such a denominator is treated as 0/0.
inline constexpr double kNegligibleVariance = 1e-24;

/// Zero-denominator floor for R^2 ratios on outcome `y`.
double r2_floor(const Vector& y);

struct CurvePoint {
  double rho = 0.0;
  double see = 0.0;
  std::optional<double> r2;
};

struct VariationDecomposition {
  double s_dd = 0.0;
  double see_lower = 0.0;
  double see_upper_frechet = 0.0;
  double see_upper_indep = 0.0;
  double v1 = 0.0;
  double v0 = 0.0;
  bool assume_nonneg_corr = false;
  Interval r2;
  R2Status r2_status = R2Status::ok;
  double r2_floor = 0.0;
  std::vector<CurvePoint> rho_curve;

  double see_upper() const { return assume_nonneg_corr ? see_upper_indep : see_upper_frechet; }
};

/// {0, 0.1, ..., 1}.
std::vector<double> default_rho_grid();
/// Inclusive grid a, a + step, ..., b (the endpoint is snapped when within
/// rounding of the last step).
std::vector<double> make_rho_grid(double from, double to, double step);

/// s_dd is the divisor-n variance of X'beta_hat; arm residuals are centred
/// within each arm before the quantile bounds and the arm variances
/// (divisor n_t) are computed.
VariationDecomposition decompose_itt(const Dataset& data, const BetaEstimate& beta,
                                     bool assume_nonneg_corr,
                                     const std::vector<double>& rho_grid = default_rho_grid());

/// S_ee(rho) = rho * lower + (1 - rho) * (V1 + V0); rho must lie in [0, 1].
std::vector<CurvePoint> sensitivity_curve(const VariationDecomposition& decomp,
                                          const std::vector<double>& rho_grid);

struct VarianceBounds {
  double var_lower = 0.0;
  double var_upper = 0.0;
  double neyman_conservative = 0.0;
  bool clamped = false;  // a bound went negative and was set to 0
};

/// Bounds on var(tau_hat) for the difference in means,
/// s1^2/n1 + s0^2/n0 - (S_dd + S_ee)/n with S_ee at its bounds.
VarianceBounds var_tau_bounds(const Dataset& data, const VariationDecomposition& decomp);

/// One-sided test that the treated residual variance (Y - X'beta_hat) is
/// smaller than the control outcome variance. Kurtosis is m4 / m2^2 with
/// divisor n_t; variances use divisor n_t - 1.
TestResult variance_ratio_test(const Dataset& data, const BetaEstimate& beta, double alpha);

}  // namespace hetfx
