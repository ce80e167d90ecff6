#pragma once

#include "hetfx/types.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <string>
#include <vector>

namespace hetfx {

/// Relative pivot threshold below which a factorization is declared singular.
inline constexpr double kPivotTolerance = 1e-10;

/// Symmetric (possibly indefinite) matrix factorized with a pivoted LDLT.
///
/// Construction fails with ErrorCode::rank_deficient when the smallest pivot
/// magnitude drops below kPivotTolerance times the largest; the message names
/// the columns whose pivots collapsed, using `labels` when supplied.
class SymmetricSolver {
 public:
  SymmetricSolver(const Matrix& a, std::string_view what,
                  const std::vector<std::string>& labels = {},
                  ErrorCode on_failure = ErrorCode::rank_deficient);

  Vector solve(const Vector& b) const { return ldlt_.solve(b); }
  Matrix solve(const Matrix& b) const { return ldlt_.solve(b); }
  Matrix inverse() const;

  /// Smallest |pivot| / largest |pivot|.
  double pivot_ratio() const noexcept { return pivot_ratio_; }

 private:
  Eigen::LDLT<Matrix> ldlt_;
  double pivot_ratio_ = 0.0;
};

/// General square system solved by full-pivot LU with the same singularity
/// rule as SymmetricSolver. The smallest pivot is reported on failure.
class GeneralSolver {
 public:
  GeneralSolver(const Matrix& a, std::string_view what,
                ErrorCode on_failure = ErrorCode::rank_deficient);

  Vector solve(const Vector& b) const { return lu_.solve(b); }
  double pivot_ratio() const noexcept { return pivot_ratio_; }

 private:
  Eigen::FullPivLU<Matrix> lu_;
  double pivot_ratio_ = 0.0;
};

/// B A B for symmetric B; symmetrized to remove rounding asymmetry.
Matrix sandwich(const Matrix& bread, const Matrix& meat);

}  // namespace hetfx
