#pragma once

// Estimators of systematic treatment-effect variation beta for
// intention-to-treat analysis.

#include "hetfx/dataset.hpp"

#include <optional>
#include <string_view>

namespace hetfx {

enum class EstimatorMethod { ri, ols, ri_adjusted, ri_complier, tsls };

std::string_view to_string(EstimatorMethod method);
std::optional<EstimatorMethod> parse_estimator(std::string_view name);
bool is_late_method(EstimatorMethod method);

enum class CovarianceMode {
  conservative,      // drops the unidentifiable S(tau X)/n term
  no_idiosyncratic,  // assumes epsilon_i = 0 and subtracts S(tau_hat X)/n
};

struct BetaEstimate {
  Vector beta;
  Matrix cov;
  EstimatorMethod method = EstimatorMethod::ri;
  CovarianceMode cov_mode = CovarianceMode::conservative;
  Vector gamma1;
  Vector gamma0;
  Vector residuals;  // Y - X' gamma_{T_i}

  Vector standard_errors() const { return cov.diagonal().cwiseMax(0.0).cwiseSqrt(); }
};

/// Randomization-based estimator using the full-sample S_xx.
///
/// beta = S_xx^-1 S_x1 - S_xx^-1 S_x0. With `no_idiosyncratic` the full
/// S(tau_hat X)/n matrix is subtracted, off-diagonals included; the result is
/// then no longer guaranteed PSD.
BetaEstimate estimate_beta_ri(const Dataset& data,
                              CovarianceMode mode = CovarianceMode::conservative);

/// Fully interacted least squares, i.e. separate per-arm regressions, with the
/// per-arm sandwich covariance.
BetaEstimate estimate_beta_ols(const Dataset& data);

/// Model-assisted RI estimator: arm moments S_xt are regression-adjusted on
/// the adjustment covariates W.
BetaEstimate estimate_beta_ri_adjusted(const Dataset& data);

/// e_i = Y_i - X_i' gamma_{T_i}.
Vector arm_residuals(const Dataset& data, const Vector& gamma1, const Vector& gamma0);

}  // namespace hetfx
