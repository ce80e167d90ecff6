#include "hetfx/latemod.hpp"

#include "hetfx/linalg.hpp"
#include "moments.hpp"

#include <algorithm>
#include <numeric>

namespace hetfx {

namespace {

void require_receipt(const Dataset& data) {
  if (!data.d) throw Error(ErrorCode::missing_receipt, "dataset has no treatment-received column");
}

int receipt(const Dataset& data, Eigen::Index i) { return (*data.d)[i]; }

// Differenced cell moments: S_xx(1) = S_xx,11 - S_xx,01 and
// S_xx(0) = S_xx,00 - S_xx,10.
struct CellMoments {
  Matrix sxx_1;
  Matrix sxx_0;
  Vector sx_1;  // S_x1,11 - S_x0,01
  Vector sx_0;  // S_x0,00 - S_x1,10
};

CellMoments cell_moments(const Dataset& data) {
  const double n1 = static_cast<double>(data.t.n1());
  const double n0 = static_cast<double>(data.t.n0());
  auto cell = [&](int t, int d) {
    return [&data, t, d](Eigen::Index i) { return data.t[i] == t && receipt(data, i) == d; };
  };
  const Matrix yx = detail::scaled_rows(data.x, data.y);
  CellMoments m;
  m.sxx_1 = detail::masked_gram(data.x, cell(1, 1), n1) - detail::masked_gram(data.x, cell(0, 1), n0);
  m.sxx_0 = detail::masked_gram(data.x, cell(0, 0), n0) - detail::masked_gram(data.x, cell(1, 0), n1);
  m.sx_1 = detail::masked_mean(yx, cell(1, 1), n1) - detail::masked_mean(yx, cell(0, 1), n0);
  m.sx_0 = detail::masked_mean(yx, cell(0, 0), n0) - detail::masked_mean(yx, cell(1, 0), n1);
  return m;
}

Vector receipt_residuals(const Dataset& data, const Vector& g_received, const Vector& g_not) {
  const Vector fit1 = data.x * g_received;
  const Vector fit0 = data.x * g_not;
  Vector out(data.n());
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    out[i] = data.y[i] - (receipt(data, i) == 1 ? fit1[i] : fit0[i]);
  }
  return out;
}

// Sandwich with differenced-moment bread and per-arm residual meat.
Matrix complier_sandwich(const Dataset& data, const SymmetricSolver& bread1,
                         const SymmetricSolver& bread0, const Vector& residuals) {
  const double n1 = static_cast<double>(data.t.n1());
  const double n0 = static_cast<double>(data.t.n0());
  const Matrix ex = detail::scaled_rows(data.x, residuals);
  return sandwich(bread1.inverse(), arm_sample_covariance(ex, data.t, 1) / n1) +
         sandwich(bread0.inverse(), arm_sample_covariance(ex, data.t, 0) / n0);
}

}  // namespace

ComplianceSummary compliance_proportions(const Dataset& data) {
  require_receipt(data);
  ComplianceSummary out;
  for (Eigen::Index i = 0; i < data.n(); ++i) out.n_td(data.t[i], receipt(data, i)) += 1;
  const double n1 = static_cast<double>(data.t.n1());
  const double n0 = static_cast<double>(data.t.n0());
  out.pi_n = out.n_td(1, 0) / n1;
  out.pi_a = out.n_td(0, 1) / n0;
  out.pi_c = out.n_td(1, 1) / n1 - out.n_td(0, 1) / n0;
  out.strong_instrument = out.pi_c >= kWeakInstrumentShare;
  return out;
}

LateEstimate estimate_beta_c_ri(const Dataset& data) {
  require_receipt(data);
  detail::require_arm_sizes(data, 2, "complier RI estimator");
  const CellMoments m = cell_moments(data);
  const SymmetricSolver s1(m.sxx_1, "S_xx(1) = S_xx,11 - S_xx,01", data.x_names,
                           ErrorCode::weak_instrument);
  const SymmetricSolver s0(m.sxx_0, "S_xx(0) = S_xx,00 - S_xx,10", data.x_names,
                           ErrorCode::weak_instrument);

  LateEstimate out;
  out.method = EstimatorMethod::ri_complier;
  out.gamma_received = s1.solve(m.sx_1);
  out.gamma_not_received = s0.solve(m.sx_0);
  out.beta_c = out.gamma_received - out.gamma_not_received;
  out.pivot_ratio = std::min(s1.pivot_ratio(), s0.pivot_ratio());
  out.residuals = receipt_residuals(data, out.gamma_received, out.gamma_not_received);
  out.cov = complier_sandwich(data, s1, s0, out.residuals);
  return out;
}

LateEstimate estimate_beta_tsls(const Dataset& data) {
  require_receipt(data);
  detail::require_arm_sizes(data, 2, "TSLS estimator");
  const Eigen::Index k = data.k();
  const double n = static_cast<double>(data.n());

  Matrix system = Matrix::Zero(2 * k, 2 * k);
  Vector rhs = Vector::Zero(2 * k);
  Vector instrument(2 * k);
  Vector regressor(2 * k);
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const auto xi = data.x.row(i).transpose();
    instrument << xi, static_cast<double>(data.t[i]) * xi;
    regressor << xi, static_cast<double>(receipt(data, i)) * xi;
    system.noalias() += instrument * regressor.transpose();
    rhs += instrument * data.y[i];
  }
  system /= n;
  rhs /= n;
  const GeneralSolver solver(system, "TSLS estimating-equation system", ErrorCode::weak_instrument);
  const Vector solution = solver.solve(rhs);

  LateEstimate out;
  out.method = EstimatorMethod::tsls;
  out.pivot_ratio = solver.pivot_ratio();
  const Vector gamma = solution.head(k);
  out.beta_c = solution.tail(k);
  out.gamma_infinity = gamma;
  out.gamma_not_received = gamma;
  out.gamma_received = gamma + out.beta_c;
  out.residuals = receipt_residuals(data, out.gamma_received, out.gamma_not_received);

  const CellMoments m = cell_moments(data);
  const SymmetricSolver s1(m.sxx_1, "S_xx(1) = S_xx,11 - S_xx,01", data.x_names,
                           ErrorCode::weak_instrument);
  const SymmetricSolver s0(m.sxx_0, "S_xx(0) = S_xx,00 - S_xx,10", data.x_names,
                           ErrorCode::weak_instrument);
  out.cov = complier_sandwich(data, s1, s0, out.residuals);
  return out;
}

ComplierCdfs complier_residual_cdfs(const Dataset& data, const LateEstimate& est) {
  require_receipt(data);
  if (est.residuals.size() != data.n()) {
    throw Error(ErrorCode::invalid_input, "estimate was not fitted on this dataset");
  }
  const ComplianceSummary cs = compliance_proportions(data);
  if (!(cs.pi_c > 0.0)) {
    throw Error(ErrorCode::weak_instrument, "estimated complier share is not positive");
  }
  const double n1 = static_cast<double>(data.t.n1());
  const double n0 = static_cast<double>(data.t.n0());

  std::vector<Eigen::Index> order(static_cast<std::size_t>(data.n()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](auto a, auto b) { return est.residuals[a] < est.residuals[b]; });

  std::vector<double> support;
  std::vector<double> raw1;
  std::vector<double> raw0;
  Eigen::Matrix2i counts = Eigen::Matrix2i::Zero();
  for (std::size_t k = 0; k < order.size(); ++k) {
    const Eigen::Index i = order[k];
    counts(data.t[i], receipt(data, i)) += 1;
    const double y = est.residuals[i];
    if (k + 1 < order.size() && est.residuals[order[k + 1]] == y) continue;
    support.push_back(y);
    raw1.push_back((counts(1, 1) / n1 - counts(0, 1) / n0) / cs.pi_c);
    raw0.push_back((counts(0, 0) / n0 - counts(1, 0) / n1) / cs.pi_c);
  }

  bool rearranged = false;
  auto isotonize = [&](std::vector<double> f) {
    double running = 0.0;
    for (double& v : f) {
      const double clipped = std::clamp(v, 0.0, 1.0);
      const double next = std::max(running, clipped);
      if (next != v) rearranged = true;
      v = running = next;
    }
    if (!(running > 0.0)) {
      throw Error(ErrorCode::weak_instrument, "estimated complier CDF carries no mass");
    }
    for (double& v : f) v /= running;
    return f;
  };

  ComplierCdfs out;
  out.treated = StepDistribution::from_cdf(support, isotonize(raw1));
  out.control = StepDistribution::from_cdf(support, isotonize(raw0));
  out.rearranged = rearranged;
  return out;
}

LateDecomposition decompose_late(const Dataset& data, const LateEstimate& est,
                                 bool assume_nonneg_corr, const std::vector<double>& rho_grid) {
  require_receipt(data);
  if (est.beta_c.size() != data.k()) {
    throw Error(ErrorCode::invalid_input, "estimate was not fitted on this dataset");
  }
  LateDecomposition out;
  out.compliance = compliance_proportions(data);
  const double pi_c = out.compliance.pi_c;
  if (!(pi_c > 0.0)) {
    throw Error(ErrorCode::weak_instrument, "estimated complier share is not positive");
  }
  out.assume_nonneg_corr = assume_nonneg_corr;

  const double n = static_cast<double>(data.n());
  const double n1 = static_cast<double>(data.t.n1());
  const double n0 = static_cast<double>(data.t.n0());
  // Complier weights; they sum to exactly one under the plug-in proportions.
  Vector weight(data.n());
  double y1 = 0.0, y0 = 0.0;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const int t = data.t[i];
    const int d = receipt(data, i);
    weight[i] = (1.0 / n - (t == 1 && d == 0 ? 1.0 / n1 : 0.0) -
                 (t == 0 && d == 1 ? 1.0 / n0 : 0.0)) / pi_c;
    (t == 1 ? y1 : y0) += data.y[i];
  }
  out.tau_c_wald = (y1 / n1 - y0 / n0) / pi_c;

  const Vector delta = data.x * est.beta_c;
  out.tau_c = weight.dot(delta);
  out.s_dd_c = weight.dot(Vector((delta.array() - out.tau_c).square()));
  if (out.s_dd_c < 0.0) {
    out.s_dd_c = 0.0;
    out.s_dd_c_clamped = true;
  }
  out.s_tt_u = pi_c * (1.0 - pi_c) * out.tau_c * out.tau_c;

  const ComplierCdfs cdfs = complier_residual_cdfs(data, est);
  out.cdfs_rearranged = cdfs.rearranged;
  const StepDistribution f1 = cdfs.treated.shifted(-cdfs.treated.mean());
  const StepDistribution f0 = cdfs.control.shifted(-cdfs.control.mean());
  out.see_c_lower = quantile_integral(f1, f0, QuantilePairing::matched);
  out.see_c_upper_frechet = quantile_integral(f1, f0, QuantilePairing::antimatched);
  out.v1c = f1.variance();
  out.v0c = f0.variance();
  out.see_c_upper_indep = out.v1c + out.v0c;

  out.r2_floor = r2_floor(data.y);
  auto at = [&](double see) {
    const double explained = out.s_tt_u + pi_c * out.s_dd_c;
    const double total = explained + pi_c * see;
    LateCurvePoint p;
    p.see_c = see;
    p.r2_u = safe_ratio(out.s_tt_u, total, out.r2_floor);
    p.r2_c = safe_ratio(out.s_dd_c, out.s_dd_c + see, out.r2_floor);
    p.r2_ux = safe_ratio(explained, total, out.r2_floor);
    return p;
  };
  const LateCurvePoint hi = at(out.see_c_lower);
  const LateCurvePoint lo = at(out.see_c_upper());
  out.r2_u = {lo.r2_u, hi.r2_u};
  out.r2_c = {lo.r2_c, hi.r2_c};
  out.r2_ux = {lo.r2_ux, hi.r2_ux};
  out.rho_curve = late_r2_sensitivity(out, rho_grid);
  return out;
}

std::vector<LateCurvePoint> late_r2_sensitivity(const LateDecomposition& decomp,
                                                const std::vector<double>& rho_grid) {
  const double pi_c = decomp.compliance.pi_c;
  const double indep = decomp.v1c + decomp.v0c;
  std::vector<LateCurvePoint> out;
  out.reserve(rho_grid.size());
  for (double rho : rho_grid) {
    if (!(rho >= 0.0 && rho <= 1.0)) {
      throw Error(ErrorCode::domain, "sensitivity parameter rho must lie in [0, 1]");
    }
    LateCurvePoint p;
    p.rho = rho;
    p.see_c = rho * decomp.see_c_lower + (1.0 - rho) * indep;
    const double explained = decomp.s_tt_u + pi_c * decomp.s_dd_c;
    const double total = explained + pi_c * p.see_c;
    p.r2_u = safe_ratio(decomp.s_tt_u, total, decomp.r2_floor);
    p.r2_c = safe_ratio(decomp.s_dd_c, decomp.s_dd_c + p.see_c, decomp.r2_floor);
    p.r2_ux = safe_ratio(explained, total, decomp.r2_floor);
    out.push_back(p);
  }
  return out;
}

}  // namespace hetfx
