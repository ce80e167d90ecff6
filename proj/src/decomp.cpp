#include "hetfx/decomp.hpp"

#include "hetfx/fpcore.hpp"
#include "hetfx/specfun.hpp"

#include <cmath>

namespace hetfx {

std::string_view to_string(R2Status status) {
  switch (status) {
    case R2Status::ok: return "ok";
    case R2Status::upper_undefined: return "upper_undefined";
    case R2Status::undefined: return "undefined";
  }
  return "unknown";
}

std::optional<double> safe_ratio(double num, double den, double floor) {
  if (den <= floor) return std::nullopt;
  return num / den;
}

double r2_floor(const Vector& y) { return kNegligibleVariance * y.squaredNorm() / static_cast<double>(y.size()); }

std::vector<double> default_rho_grid() { return make_rho_grid(0.0, 1.0, 0.1); }

std::vector<double> make_rho_grid(double from, double to, double step) {
  if (!(step > 0.0) || !(to >= from)) {
    throw Error(ErrorCode::domain, "rho grid needs step > 0 and to >= from");
  }
  const auto count = static_cast<long long>(std::floor((to - from) / step + 1e-9));
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(count + 1));
  for (long long k = 0; k <= count; ++k) grid.push_back(from + static_cast<double>(k) * step);
  if (std::abs(grid.back() - to) < 1e-9 * std::max(1.0, std::abs(to))) grid.back() = to;
  return grid;
}

namespace {

Vector centered_arm(const Vector& residuals, const Assignment& t, int arm) {
  Vector out(t.arm_size(arm));
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < residuals.size(); ++i) {
    if (t[i] == arm) out[k++] = residuals[i];
  }
  return out.array() - out.mean();
}

void check_rho(double rho) {
  if (!(rho >= 0.0 && rho <= 1.0)) {
    throw Error(ErrorCode::domain, "sensitivity parameter rho must lie in [0, 1]");
  }
}

}  // namespace

VariationDecomposition decompose_itt(const Dataset& data, const BetaEstimate& beta,
                                     bool assume_nonneg_corr,
                                     const std::vector<double>& rho_grid) {
  if (beta.beta.size() != data.k() || beta.residuals.size() != data.n()) {
    throw Error(ErrorCode::invalid_input, "estimate was not fitted on this dataset");
  }
  if (data.t.n1() < 2 || data.t.n0() < 2) {
    throw Error(ErrorCode::insufficient_data, "decomposition needs at least 2 units per arm");
  }
  VariationDecomposition out;
  out.assume_nonneg_corr = assume_nonneg_corr;
  out.s_dd = population_variance(Vector(data.x * beta.beta));

  const Vector e1 = centered_arm(beta.residuals, data.t, 1);
  const Vector e0 = centered_arm(beta.residuals, data.t, 0);
  out.see_lower = quantile_integral(e1, e0, QuantilePairing::matched);
  out.see_upper_frechet = quantile_integral(e1, e0, QuantilePairing::antimatched);
  out.v1 = e1.squaredNorm() / static_cast<double>(e1.size());
  out.v0 = e0.squaredNorm() / static_cast<double>(e0.size());
  out.see_upper_indep = out.v1 + out.v0;

  out.r2_floor = r2_floor(data.y);
  out.r2.upper = safe_ratio(out.s_dd, out.s_dd + out.see_lower, out.r2_floor);
  out.r2.lower = safe_ratio(out.s_dd, out.s_dd + out.see_upper(), out.r2_floor);
  if (!out.r2.lower) {
    out.r2_status = R2Status::undefined;
  } else if (!out.r2.upper) {
    out.r2_status = R2Status::upper_undefined;
  }
  out.rho_curve = sensitivity_curve(out, rho_grid);
  return out;
}

std::vector<CurvePoint> sensitivity_curve(const VariationDecomposition& decomp,
                                          const std::vector<double>& rho_grid) {
  std::vector<CurvePoint> out;
  out.reserve(rho_grid.size());
  const double indep = decomp.v1 + decomp.v0;
  for (double rho : rho_grid) {
    check_rho(rho);
    CurvePoint p;
    p.rho = rho;
    p.see = rho * decomp.see_lower + (1.0 - rho) * indep;
    p.r2 = safe_ratio(decomp.s_dd, decomp.s_dd + p.see, decomp.r2_floor);
    out.push_back(p);
  }
  return out;
}

VarianceBounds var_tau_bounds(const Dataset& data, const VariationDecomposition& decomp) {
  const double n = static_cast<double>(data.n());
  const double n1 = static_cast<double>(data.t.n1());
  const double n0 = static_cast<double>(data.t.n0());
  const Matrix y = data.y;
  const double s1 = arm_sample_covariance(y, data.t, 1)(0, 0);
  const double s0 = arm_sample_covariance(y, data.t, 0)(0, 0);

  VarianceBounds out;
  out.neyman_conservative = s1 / n1 + s0 / n0;
  out.var_upper = out.neyman_conservative - (decomp.s_dd + decomp.see_lower) / n;
  out.var_lower = out.neyman_conservative - (decomp.s_dd + decomp.see_upper()) / n;
  if (out.var_upper < 0.0) {
    out.var_upper = 0.0;
    out.clamped = true;
  }
  if (out.var_lower < 0.0) {
    out.var_lower = 0.0;
    out.clamped = true;
  }
  return out;
}

namespace {

struct Moments {
  double sample_variance;
  double kurtosis;
};

Moments arm_moments(const Vector& v) {
  const double n = static_cast<double>(v.size());
  const Eigen::ArrayXd dev = v.array() - v.mean();
  const double m2 = dev.square().sum() / n;
  const double m4 = dev.square().square().sum() / n;
  if (!(m2 > 0.0)) throw Error(ErrorCode::degenerate_sample, "arm sample has zero variance");
  return {dev.square().sum() / (n - 1.0), m4 / (m2 * m2)};
}

}  // namespace

TestResult variance_ratio_test(const Dataset& data, const BetaEstimate& beta, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::domain, "alpha must be in (0, 1)");
  if (data.t.n1() < 4 || data.t.n0() < 4) {
    throw Error(ErrorCode::insufficient_data, "variance ratio test needs at least 4 units per arm");
  }
  if (beta.beta.size() != data.k()) {
    throw Error(ErrorCode::invalid_input, "estimate was not fitted on this dataset");
  }
  const Vector adjusted = data.y - data.x * beta.beta;
  Vector treated(data.t.n1());
  Vector control(data.t.n0());
  for (Eigen::Index i = 0, a = 0, b = 0; i < data.n(); ++i) {
    if (data.t.treated(i)) {
      treated[a++] = adjusted[i];
    } else {
      control[b++] = data.y[i];
    }
  }
  const Moments m1 = arm_moments(treated);
  const Moments m0 = arm_moments(control);
  const double n1 = static_cast<double>(treated.size());
  const double n0 = static_cast<double>(control.size());
  const double se = std::sqrt((m1.kurtosis - 1.0) / n1 + (m0.kurtosis - 1.0) / n0);

  TestResult out;
  out.name = "variance_ratio";
  out.reference = "normal";
  out.alpha = alpha;
  out.statistic = (std::log(m1.sample_variance) - std::log(m0.sample_variance)) / se;
  out.p_value = normal_cdf(out.statistic);
  out.reject = out.statistic < normal_quantile(alpha);
  return out;
}

}  // namespace hetfx
