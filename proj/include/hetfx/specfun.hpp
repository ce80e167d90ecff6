#pragma once

namespace hetfx {

/// Regularized lower incomplete gamma P(a, x).
double regularized_gamma_p(double a, double x);
/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x), computed without
/// cancellation in the upper tail.
double regularized_gamma_q(double a, double x);

double normal_cdf(double x);
/// Phi^-1(p) for p in (0, 1).
double normal_quantile(double p);

/// Chi-square distribution with integer degrees of freedom.
class ChiSquare {
 public:
  explicit ChiSquare(int df);

  int df() const noexcept { return df_; }
  double pdf(double x) const;
  double cdf(double x) const;
  double survival(double x) const;
  /// x with cdf(x) = p, p in (0, 1).
  double quantile(double p) const;
  /// x with survival(x) = q, q in (0, 1).
  double inverse_survival(double q) const;

 private:
  double solve(double target, bool upper) const;
  int df_;
};

}  // namespace hetfx
