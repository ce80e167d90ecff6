#pragma once

// Noncompliance: compliance strata proportions, estimators of complier
// systematic variation beta_c, complier residual distributions, and the
// three-part decomposition of effect variance.

#include "hetfx/decomp.hpp"
#include "hetfx/fpcore.hpp"
#include "hetfx/itt.hpp"

#include <vector>

namespace hetfx {

/// Below this estimated complier share the instrument is flagged as weak.
inline constexpr double kWeakInstrumentShare = 0.05;

struct ComplianceSummary {
  Eigen::Matrix2i n_td = Eigen::Matrix2i::Zero();  // (t, d) cell counts
  double pi_a = 0.0;
  double pi_n = 0.0;
  double pi_c = 0.0;
  bool strong_instrument = false;
};

ComplianceSummary compliance_proportions(const Dataset& data);

struct LateEstimate {
  Vector beta_c;
  Matrix cov;
  EstimatorMethod method = EstimatorMethod::ri_complier;
  /// Coefficients applied to units with D = 1 and D = 0 when forming
  /// residuals: (gamma_1c, gamma_0c) for RI, (gamma + beta, gamma) for TSLS.
  Vector gamma_received;
  Vector gamma_not_received;
  /// TSLS intercept-block coefficient, the estimate of gamma_infinity.
  std::optional<Vector> gamma_infinity;
  Vector residuals;
  double pivot_ratio = 0.0;  // conditioning of the solved system

  Vector standard_errors() const { return cov.diagonal().cwiseMax(0.0).cwiseSqrt(); }
};

/// Randomization-based complier estimator built from differenced (T, D)
/// cell moments. Singular difference matrices raise weak_instrument.
LateEstimate estimate_beta_c_ri(const Dataset& data);

/// Fully interacted two-stage least squares, solving the 2K x 2K estimating
/// equations with instruments (X, T X) for regressors (X, D X).
LateEstimate estimate_beta_tsls(const Dataset& data);

struct ComplierCdfs {
  StepDistribution treated;  // F_1c
  StepDistribution control;  // F_0c
  /// True when clipping or rearrangement changed any raw difference value.
  bool rearranged = false;
};

/// (F_11 - F_01) / pi_c and (F_00 - F_10) / pi_c over the estimate's
/// residuals, clipped to [0, 1], made monotone by a running maximum and
/// rescaled so the supremum is 1.
ComplierCdfs complier_residual_cdfs(const Dataset& data, const LateEstimate& est);

struct LateCurvePoint {
  double rho = 0.0;
  double see_c = 0.0;
  std::optional<double> r2_u;
  std::optional<double> r2_c;
  std::optional<double> r2_ux;
};

struct LateDecomposition {
  ComplianceSummary compliance;
  double tau_c = 0.0;       // weighted mean of X'beta_c over estimated compliers
  double tau_c_wald = 0.0;  // ITT / pi_c, for reference
  double s_tt_u = 0.0;      // pi_c (1 - pi_c) tau_c^2
  double s_dd_c = 0.0;
  bool s_dd_c_clamped = false;
  double see_c_lower = 0.0;
  double see_c_upper_frechet = 0.0;
  double see_c_upper_indep = 0.0;
  double v1c = 0.0;
  double v0c = 0.0;
  bool assume_nonneg_corr = false;
  bool cdfs_rearranged = false;
  double r2_floor = 0.0;
  Interval r2_u;
  Interval r2_c;
  Interval r2_ux;
  std::vector<LateCurvePoint> rho_curve;

  double see_c_upper() const { return assume_nonneg_corr ? see_c_upper_indep : see_c_upper_frechet; }
};

LateDecomposition decompose_late(const Dataset& data, const LateEstimate& est,
                                 bool assume_nonneg_corr,
                                 const std::vector<double>& rho_grid = default_rho_grid());

std::vector<LateCurvePoint> late_r2_sensitivity(const LateDecomposition& decomp,
                                                const std::vector<double>& rho_grid);

}  // namespace hetfx
