#include "hetfx/linalg.hpp"

#include <cmath>
#include <sstream>

namespace hetfx {

SymmetricSolver::SymmetricSolver(const Matrix& a, std::string_view what,
                                 const std::vector<std::string>& labels, ErrorCode on_failure) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw Error(ErrorCode::invalid_input, std::string(what) + " is not a nonempty square matrix");
  }
  ldlt_.compute(a);
  const Vector pivots = ldlt_.vectorD().cwiseAbs();
  const double largest = pivots.maxCoeff();
  const double smallest = pivots.minCoeff();
  pivot_ratio_ = largest > 0.0 ? smallest / largest : 0.0;
  if (ldlt_.info() == Eigen::Success && largest > 0.0 && pivot_ratio_ >= kPivotTolerance &&
      std::isfinite(pivot_ratio_)) {
    return;
  }

  // Map collapsed pivots back to original columns through the permutation.
  // Row k of P A P' is original row order[k].
  Eigen::VectorXi order = Eigen::VectorXi::LinSpaced(a.rows(), 0, static_cast<int>(a.rows()) - 1);
  order = ldlt_.transpositionsP() * order;
  std::ostringstream msg;
  msg << what << " is singular (pivot ratio " << pivot_ratio_ << "); offending columns:";
  for (Eigen::Index k = 0; k < pivots.size(); ++k) {
    if (largest > 0.0 && pivots[k] >= kPivotTolerance * largest) continue;
    const Eigen::Index col = order[k];
    msg << ' ';
    if (static_cast<std::size_t>(col) < labels.size()) {
      msg << labels[static_cast<std::size_t>(col)];
    } else {
      msg << col;
    }
  }
  throw Error(on_failure, msg.str());
}

Matrix SymmetricSolver::inverse() const {
  const Eigen::Index k = ldlt_.rows();
  Matrix inv = ldlt_.solve(Matrix::Identity(k, k));
  return (inv + inv.transpose()) / 2.0;
}

GeneralSolver::GeneralSolver(const Matrix& a, std::string_view what, ErrorCode on_failure) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw Error(ErrorCode::invalid_input, std::string(what) + " is not a nonempty square matrix");
  }
  lu_.compute(a);
  const Vector pivots = lu_.matrixLU().diagonal().cwiseAbs();
  const double largest = pivots.maxCoeff();
  const double smallest = pivots.minCoeff();
  pivot_ratio_ = largest > 0.0 ? smallest / largest : 0.0;
  if (!(largest > 0.0) || !(pivot_ratio_ >= kPivotTolerance)) {
    std::ostringstream msg;
    msg << what << " is singular; smallest pivot " << smallest << " (ratio " << pivot_ratio_
        << ")";
    throw Error(on_failure, msg.str());
  }
}

Matrix sandwich(const Matrix& bread, const Matrix& meat) {
  Matrix out = bread * meat * bread;
  return (out + out.transpose()) / 2.0;
}

}  // namespace hetfx
