#include "hetfx/specfun.hpp"

#include "hetfx/types.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace hetfx {

namespace {

constexpr double kEps = 1e-16;
constexpr int kMaxIter = 1000;

// Series for P(a, x), valid for x < a + 1.
double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  double ap = a;
  for (int k = 0; k < kMaxIter; ++k) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Modified Lentz continued fraction for Q(a, x), valid for x >= a + 1.
double gamma_q_fraction(double a, double x) {
  constexpr double tiny = std::numeric_limits<double>::min() / kEps;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

void check_gamma_args(double a, double x) {
  if (!(a > 0.0) || !(x >= 0.0)) {
    throw Error(ErrorCode::domain, "incomplete gamma requires a > 0 and x >= 0");
  }
}

}  // namespace

double regularized_gamma_p(double a, double x) {
  check_gamma_args(a, x);
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return x < a + 1.0 ? gamma_p_series(a, x) : 1.0 - gamma_q_fraction(a, x);
}

double regularized_gamma_q(double a, double x) {
  check_gamma_args(a, x);
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return x < a + 1.0 ? 1.0 - gamma_p_series(a, x) : gamma_q_fraction(a, x);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::domain, "normal quantile needs p in (0, 1)");
  // Acklam's rational approximation, then one Halley refinement step.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double low = 0.02425;
  double x;
  if (p < low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

ChiSquare::ChiSquare(int df) : df_(df) {
  if (df < 1) throw Error(ErrorCode::domain, "chi-square degrees of freedom must be >= 1");
}

double ChiSquare::pdf(double x) const {
  if (x < 0.0) return 0.0;
  const double k = 0.5 * df_;
  if (x == 0.0) return df_ == 1 ? std::numeric_limits<double>::infinity() : (df_ == 2 ? 0.5 : 0.0);
  return std::exp((k - 1.0) * std::log(x) - 0.5 * x - k * std::numbers::ln2 - std::lgamma(k));
}

double ChiSquare::cdf(double x) const {
  if (x < 0.0) throw Error(ErrorCode::domain, "chi-square argument must be >= 0");
  return regularized_gamma_p(0.5 * df_, 0.5 * x);
}

double ChiSquare::survival(double x) const {
  if (x < 0.0) throw Error(ErrorCode::domain, "chi-square argument must be >= 0");
  return regularized_gamma_q(0.5 * df_, 0.5 * x);
}

double ChiSquare::quantile(double p) const {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::domain, "chi-square quantile needs p in (0, 1)");
  return p <= 0.5 ? solve(p, false) : solve(1.0 - p, true);
}

double ChiSquare::inverse_survival(double q) const {
  if (!(q > 0.0 && q < 1.0)) throw Error(ErrorCode::domain, "chi-square survival level in (0, 1)");
  return q <= 0.5 ? solve(q, true) : solve(1.0 - q, false);
}

// Newton iterations on the tail function closest to the target, safeguarded
// by a bisection bracket.
double ChiSquare::solve(double target, bool upper) const {
  auto f = [&](double x) { return upper ? survival(x) - target : cdf(x) - target; };
  // f is decreasing in x for the upper tail, increasing otherwise.
  const double sign = upper ? -1.0 : 1.0;

  // Wilson-Hilferty starting point.
  const double k = df_;
  const double z = upper ? -normal_quantile(target) : normal_quantile(target);
  const double h = 2.0 / (9.0 * k);
  double x = k * std::pow(std::max(1.0 - h + z * std::sqrt(h), 1e-3), 3.0);

  double lo = 0.0;
  double hi = std::max(2.0 * x, k + 10.0);
  while (sign * f(hi) < 0.0) hi *= 2.0;
  if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);

  for (int iter = 0; iter < 200; ++iter) {
    const double fx = f(x);
    if (fx == 0.0) return x;
    if (sign * fx < 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    const double slope = sign * pdf(x);
    double next = slope != 0.0 && std::isfinite(slope) ? x - fx / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-15 * std::max(1.0, std::abs(x))) return next;
    x = next;
  }
  return x;
}

}  // namespace hetfx
