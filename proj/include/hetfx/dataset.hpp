#pragma once

#include "hetfx/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace hetfx {

/// Unit-level observed data from one completely randomized experiment.
///
/// `x` always carries the intercept as its first column; build datasets with
/// `Dataset::with_intercept` so the library owns that column.
struct Dataset {
  Matrix x;
  Assignment t;
  Vector y;
  std::optional<Matrix> w;       // adjustment covariates, no intercept
  std::optional<IndexVector> d;  // treatment received
  std::vector<std::string> x_names;
  std::vector<std::string> w_names;

  Eigen::Index n() const { return y.size(); }
  Eigen::Index k() const { return x.cols(); }
  bool has_receipt() const { return d.has_value(); }
  bool has_adjustment() const { return w.has_value(); }

  /// Prepends the intercept to `covariates`. Rejects any covariate column that
  /// is constant (a user-supplied intercept would be double counted).
  static Dataset with_intercept(const Matrix& covariates, IndexVector t, Vector y,
                                std::vector<std::string> names = {},
                                std::optional<Matrix> w = std::nullopt,
                                std::optional<IndexVector> d = std::nullopt,
                                std::vector<std::string> w_names = {});

  /// Checks shapes, the leading ones column, finiteness, and binary receipt.
  void validate() const;

  /// Copy with the covariate block replaced (intercept re-added).
  Dataset with_covariates(const Matrix& covariates, std::vector<std::string> names = {}) const;

  /// Observed data implied by potential outcomes under assignment `t`.
  static Dataset observe(const PotentialTable& table, const Matrix& x_with_intercept,
                         const Assignment& t);
};

}  // namespace hetfx
