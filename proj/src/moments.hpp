#pragma once

// Shared sample-moment helpers for the estimator translation units.

#include "hetfx/dataset.hpp"
#include "hetfx/fpcore.hpp"

namespace hetfx::detail {

/// Rows Y_i * X_i.
inline Matrix scaled_rows(const Matrix& x, const Vector& y) {
  return x.array().colwise() * y.array();
}

/// Sum of `rows` over units selected by `mask`, divided by `divisor`.
template <typename Mask>
Vector masked_mean(const Matrix& rows, Mask&& mask, double divisor) {
  Vector out = Vector::Zero(rows.cols());
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    if (mask(i)) out += rows.row(i).transpose();
  }
  return out / divisor;
}

/// Sum of x_i x_i' over units selected by `mask`, divided by `divisor`.
template <typename Mask>
Matrix masked_gram(const Matrix& x, Mask&& mask, double divisor) {
  Matrix out = Matrix::Zero(x.cols(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    if (mask(i)) out.noalias() += x.row(i).transpose() * x.row(i);
  }
  return (out + out.transpose()) / (2.0 * divisor);
}

inline void require_arm_sizes(const Dataset& data, Eigen::Index minimum, const char* who) {
  if (data.t.n1() < minimum || data.t.n0() < minimum) {
    throw Error(ErrorCode::insufficient_data,
                std::string(who) + " needs at least " + std::to_string(minimum) +
                    " units per arm");
  }
}

}  // namespace hetfx::detail
