#include "hetfx/itt.hpp"

#include "hetfx/linalg.hpp"
#include "moments.hpp"

namespace hetfx {

std::string_view to_string(EstimatorMethod method) {
  switch (method) {
    case EstimatorMethod::ri: return "RI";
    case EstimatorMethod::ols: return "OLS";
    case EstimatorMethod::ri_adjusted: return "RI_adjusted";
    case EstimatorMethod::ri_complier: return "RI_complier";
    case EstimatorMethod::tsls: return "TSLS";
  }
  return "unknown";
}

std::optional<EstimatorMethod> parse_estimator(std::string_view name) {
  for (auto m : {EstimatorMethod::ri, EstimatorMethod::ols, EstimatorMethod::ri_adjusted,
                 EstimatorMethod::ri_complier, EstimatorMethod::tsls}) {
    if (name == to_string(m)) return m;
  }
  return std::nullopt;
}

bool is_late_method(EstimatorMethod method) {
  return method == EstimatorMethod::ri_complier || method == EstimatorMethod::tsls;
}

Vector arm_residuals(const Dataset& data, const Vector& gamma1, const Vector& gamma0) {
  if (gamma1.size() != data.k() || gamma0.size() != data.k()) {
    throw Error(ErrorCode::invalid_input, "coefficient length differs from covariate count");
  }
  const Vector fit1 = data.x * gamma1;
  const Vector fit0 = data.x * gamma0;
  Vector out(data.n());
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    out[i] = data.y[i] - (data.t.treated(i) ? fit1[i] : fit0[i]);
  }
  return out;
}

BetaEstimate estimate_beta_ri(const Dataset& data, CovarianceMode mode) {
  detail::require_arm_sizes(data, 2, "RI estimator");
  const double n = static_cast<double>(data.n());
  const double n1 = static_cast<double>(data.t.n1());
  const double n0 = static_cast<double>(data.t.n0());

  const Matrix sxx = data.x.transpose() * data.x / n;
  const SymmetricSolver sxx_solver(Matrix((sxx + sxx.transpose()) / 2.0), "S_xx", data.x_names);
  const Matrix yx = detail::scaled_rows(data.x, data.y);
  const Vector sx1 = detail::masked_mean(yx, [&](auto i) { return data.t.treated(i); }, n1);
  const Vector sx0 = detail::masked_mean(yx, [&](auto i) { return !data.t.treated(i); }, n0);

  BetaEstimate out;
  out.method = EstimatorMethod::ri;
  out.cov_mode = mode;
  out.gamma1 = sxx_solver.solve(sx1);
  out.gamma0 = sxx_solver.solve(sx0);
  out.beta = out.gamma1 - out.gamma0;

  Matrix meat = arm_sample_covariance(yx, data.t, 1) / n1 + arm_sample_covariance(yx, data.t, 0) / n0;
  if (mode == CovarianceMode::no_idiosyncratic) {
    const Vector tau_hat = data.x * out.beta;
    meat -= fp_covariance(detail::scaled_rows(data.x, tau_hat)) / n;
  }
  out.cov = sandwich(sxx_solver.inverse(), meat);
  out.residuals = arm_residuals(data, out.gamma1, out.gamma0);
  return out;
}

BetaEstimate estimate_beta_ols(const Dataset& data) {
  detail::require_arm_sizes(data, data.k() + 1, "OLS estimator");
  const double n1 = static_cast<double>(data.t.n1());
  const double n0 = static_cast<double>(data.t.n0());
  auto treated = [&](auto i) { return data.t.treated(i); };
  auto control = [&](auto i) { return !data.t.treated(i); };

  const SymmetricSolver s1(detail::masked_gram(data.x, treated, n1), "S_xx,1 (treated arm)",
                           data.x_names);
  const SymmetricSolver s0(detail::masked_gram(data.x, control, n0), "S_xx,0 (control arm)",
                           data.x_names);
  const Matrix yx = detail::scaled_rows(data.x, data.y);

  BetaEstimate out;
  out.method = EstimatorMethod::ols;
  out.gamma1 = s1.solve(detail::masked_mean(yx, treated, n1));
  out.gamma0 = s0.solve(detail::masked_mean(yx, control, n0));
  out.beta = out.gamma1 - out.gamma0;
  out.residuals = arm_residuals(data, out.gamma1, out.gamma0);

  const Matrix ex = detail::scaled_rows(data.x, out.residuals);
  out.cov = sandwich(s1.inverse(), arm_sample_covariance(ex, data.t, 1) / n1) +
            sandwich(s0.inverse(), arm_sample_covariance(ex, data.t, 0) / n0);
  return out;
}

BetaEstimate estimate_beta_ri_adjusted(const Dataset& data) {
  if (!data.w) {
    throw Error(ErrorCode::missing_adjustment, "model-assisted estimator needs adjustment covariates");
  }
  const Matrix& w = *data.w;
  const Eigen::Index j = w.cols();
  detail::require_arm_sizes(data, j + 2, "model-assisted estimator");
  const double n = static_cast<double>(data.n());
  const double n1 = static_cast<double>(data.t.n1());
  const double n0 = static_cast<double>(data.t.n0());

  const Matrix sxx = data.x.transpose() * data.x / n;
  const SymmetricSolver sxx_solver(Matrix((sxx + sxx.transpose()) / 2.0), "S_xx", data.x_names);
  const Matrix sww = w.transpose() * w / n;
  [[maybe_unused]] const SymmetricSolver sww_check(Matrix((sww + sww.transpose()) / 2.0), "S_ww",
                                                   data.w_names);

  const Vector w_bar = w.colwise().mean().transpose();
  const Matrix yx = detail::scaled_rows(data.x, data.y);

  BetaEstimate out;
  out.method = EstimatorMethod::ri_adjusted;
  Matrix adjusted(data.n(), data.k());  // E_i(t) = Y_i X_i - B_t'(W_i - W_bar)
  Vector gamma[2];
  for (int arm = 0; arm <= 1; ++arm) {
    const Matrix w_arm = arm_rows(w, data.t, arm);
    const Matrix z_arm = arm_rows(yx, data.t, arm);
    const double nt = static_cast<double>(w_arm.rows());
    const Vector w_mean = w_arm.colwise().mean().transpose();
    const Vector z_mean = z_arm.colwise().mean().transpose();
    const Matrix w_c = w_arm.rowwise() - w_mean.transpose();
    const Matrix z_c = z_arm.rowwise() - z_mean.transpose();
    const Matrix sww_t = w_c.transpose() * w_c / (nt - 1.0);
    const Matrix swz_t = w_c.transpose() * z_c / (nt - 1.0);
    const SymmetricSolver arm_solver(Matrix((sww_t + sww_t.transpose()) / 2.0),
                                     arm == 1 ? "S_ww,1 (treated arm)" : "S_ww,0 (control arm)",
                                     data.w_names);
    const Matrix b = arm_solver.solve(swz_t);  // J x K
    const Vector sx_adjusted = z_mean - b.transpose() * (w_mean - w_bar);
    gamma[arm] = sxx_solver.solve(sx_adjusted);
    for (Eigen::Index i = 0; i < data.n(); ++i) {
      if (data.t[i] != arm) continue;
      adjusted.row(i) = yx.row(i) - (w.row(i) - w_bar.transpose()) * b;
    }
  }
  out.gamma1 = gamma[1];
  out.gamma0 = gamma[0];
  out.beta = out.gamma1 - out.gamma0;
  const Matrix meat =
      arm_sample_covariance(adjusted, data.t, 1) / n1 + arm_sample_covariance(adjusted, data.t, 0) / n0;
  out.cov = sandwich(sxx_solver.inverse(), meat);
  out.residuals = arm_residuals(data, out.gamma1, out.gamma0);
  return out;
}

}  // namespace hetfx
