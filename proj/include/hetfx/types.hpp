#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hetfx {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using IndexVector = Eigen::VectorXi;

enum class ErrorCode {
  insufficient_data,
  rank_deficient,
  missing_adjustment,
  missing_receipt,
  weak_instrument,
  domain,
  undefined_r2,
  degenerate_sample,
  nothing_to_test,
  invalid_input,
  io,
};

std::string_view to_string(ErrorCode code);

// Process exit status used by the CLI for each error category.
int exit_status(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Treatment assignment of a completely randomized experiment (1 = treated).
class Assignment {
 public:
  Assignment() = default;

  /// Validates that every entry is 0 or 1 and that both arms are nonempty.
  explicit Assignment(IndexVector t);

  const IndexVector& values() const noexcept { return t_; }
  Eigen::Index size() const noexcept { return t_.size(); }
  Eigen::Index n1() const noexcept { return n1_; }
  Eigen::Index n0() const noexcept { return t_.size() - n1_; }
  Eigen::Index arm_size(int arm) const noexcept { return arm == 1 ? n1() : n0(); }
  bool treated(Eigen::Index i) const { return t_[i] == 1; }
  int operator[](Eigen::Index i) const { return t_[i]; }

 private:
  IndexVector t_;
  Eigen::Index n1_ = 0;
};

enum class Stratum : std::uint8_t { always_taker, never_taker, complier, defier };

/// Full set of potential outcomes for a finite population. Only oracles and
/// simulators see this; estimators work from observed data.
struct PotentialTable {
  Vector y1;
  Vector y0;
  std::optional<IndexVector> d1;
  std::optional<IndexVector> d0;

  Eigen::Index size() const { return y1.size(); }
  Vector effects() const { return y1 - y0; }
  bool has_receipt() const { return d1.has_value() && d0.has_value(); }
  Stratum stratum(Eigen::Index i) const;
  std::vector<Stratum> strata() const;

  /// Throws on mismatched lengths, non-binary receipt, or any defier.
  void validate() const;
};

}  // namespace hetfx
