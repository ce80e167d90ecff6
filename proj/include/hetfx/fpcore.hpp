#pragma once

// Finite-population primitives: covariance operators, the vector-outcome
// difference-in-means estimator, and exact quantile-matching integrals.

#include "hetfx/types.hpp"

#include <algorithm>
#include <vector>

namespace hetfx {

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using DenseVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Covariance operator over the rows of `rows` (one row per unit), divisor
/// n - 1. The result is symmetric to exact equality.
template <typename Derived>
DenseMatrix<typename Derived::Scalar> fp_covariance(const Eigen::MatrixBase<Derived>& rows) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = rows.rows();
  if (n < 2) {
    throw Error(ErrorCode::insufficient_data, "covariance needs at least 2 units, got " +
                                                  std::to_string(n));
  }
  const DenseVector<Scalar> mean = rows.colwise().mean().transpose();
  const DenseMatrix<Scalar> centered = rows.rowwise() - mean.transpose();
  DenseMatrix<Scalar> cov = centered.transpose() * centered / Scalar(n - 1);
  return (cov + cov.transpose()) / Scalar(2);
}

/// Rows of `rows` whose unit sits in `arm`.
template <typename Derived>
DenseMatrix<typename Derived::Scalar> arm_rows(const Eigen::MatrixBase<Derived>& rows,
                                               const Assignment& t, int arm) {
  if (rows.rows() != t.size()) {
    throw Error(ErrorCode::invalid_input, "sample and assignment lengths differ");
  }
  DenseMatrix<typename Derived::Scalar> out(t.arm_size(arm), rows.cols());
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    if (t[i] == arm) out.row(k++) = rows.row(i);
  }
  return out;
}

/// Sample covariance of the units in one arm, divisor n_t - 1.
template <typename Derived>
DenseMatrix<typename Derived::Scalar> arm_sample_covariance(
    const Eigen::MatrixBase<Derived>& rows, const Assignment& t, int arm) {
  if (t.arm_size(arm) < 2) {
    throw Error(ErrorCode::insufficient_data,
                "arm " + std::to_string(arm) + " has fewer than 2 units");
  }
  return fp_covariance(arm_rows(rows, t, arm));
}

template <typename Scalar>
struct NeymanEstimate {
  DenseVector<Scalar> tau;
  /// Conservative covariance S_1/n_1 + S_0/n_0; the unidentifiable
  /// S{V(1) - V(0)}/n term is omitted.
  DenseMatrix<Scalar> cov;
};

/// Difference in arm mean vectors with its conservative covariance.
template <typename Derived>
NeymanEstimate<typename Derived::Scalar> neyman_vector(const Eigen::MatrixBase<Derived>& rows,
                                                       const Assignment& t) {
  using Scalar = typename Derived::Scalar;
  const auto treated = arm_rows(rows, t, 1);
  const auto control = arm_rows(rows, t, 0);
  if (treated.rows() < 2 || control.rows() < 2) {
    throw Error(ErrorCode::insufficient_data, "both arms need at least 2 units");
  }
  NeymanEstimate<Scalar> out;
  out.tau = (treated.colwise().mean() - control.colwise().mean()).transpose();
  out.cov = fp_covariance(treated) / Scalar(treated.rows()) +
            fp_covariance(control) / Scalar(control.rows());
  return out;
}

/// Finite-population variance with divisor n (not n - 1).
template <typename Derived>
typename Derived::Scalar population_variance(const Eigen::MatrixBase<Derived>& v) {
  const auto n = v.size();
  if (n < 1) throw Error(ErrorCode::insufficient_data, "variance of an empty sample");
  const auto mean = v.mean();
  return (v.array() - mean).square().sum() / typename Derived::Scalar(n);
}

/// Discrete distribution with finitely many atoms, stored as ascending support
/// points and cumulative probabilities whose last entry is exactly 1.
class StepDistribution {
 public:
  StepDistribution() = default;

  /// Uniform mass on every element of `sample` (ties kept as separate atoms).
  static StepDistribution empirical(const Eigen::Ref<const Vector>& sample);

  /// From ascending support and nondecreasing CDF values at each support
  /// point; atoms with zero mass are dropped and the last value is forced to 1.
  static StepDistribution from_cdf(std::vector<double> support, std::vector<double> cdf);

  const std::vector<double>& support() const noexcept { return support_; }
  const std::vector<double>& cdf() const noexcept { return cdf_; }
  std::size_t atoms() const noexcept { return support_.size(); }

  double mean() const;
  /// Variance of the distribution itself (divisor = total mass 1).
  double variance() const;
  double cdf_at(double y) const;
  /// inf{x : F(x) >= u} for u in (0, 1].
  double quantile(double u) const;
  StepDistribution shifted(double delta) const;

 private:
  std::vector<double> support_;
  std::vector<double> cdf_;
};

enum class QuantilePairing { matched, antimatched };

/// Exact integral over u in (0,1) of {F1^-1(u) - F0^-1(u)}^2 (matched) or
/// {F1^-1(u) - F0^-1(1-u)}^2 (antimatched), evaluated piecewise over the
/// merged CDF breakpoints of the two step distributions.
double quantile_integral(const StepDistribution& first, const StepDistribution& second,
                         QuantilePairing mode);

/// Same integral with each sample treated as a discrete uniform distribution.
double quantile_integral(const Eigen::Ref<const Vector>& sample1,
                         const Eigen::Ref<const Vector>& sample0, QuantilePairing mode);

}  // namespace hetfx
