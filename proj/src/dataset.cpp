#include "hetfx/dataset.hpp"

#include <cmath>

namespace hetfx {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::insufficient_data: return "insufficient_data";
    case ErrorCode::rank_deficient: return "rank_deficient";
    case ErrorCode::missing_adjustment: return "missing_adjustment";
    case ErrorCode::missing_receipt: return "missing_receipt";
    case ErrorCode::weak_instrument: return "weak_instrument";
    case ErrorCode::domain: return "domain";
    case ErrorCode::undefined_r2: return "undefined_r2";
    case ErrorCode::degenerate_sample: return "degenerate_sample";
    case ErrorCode::nothing_to_test: return "nothing_to_test";
    case ErrorCode::invalid_input: return "invalid_input";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

int exit_status(ErrorCode code) { return 10 + static_cast<int>(code); }

Assignment::Assignment(IndexVector t) : t_(std::move(t)) {
  for (Eigen::Index i = 0; i < t_.size(); ++i) {
    if (t_[i] != 0 && t_[i] != 1) {
      throw Error(ErrorCode::invalid_input,
                  "assignment entry " + std::to_string(i) + " is not 0 or 1");
    }
  }
  n1_ = t_.sum();
  if (n1_ == 0 || n1_ == t_.size()) {
    throw Error(ErrorCode::insufficient_data, "assignment leaves an arm empty");
  }
}

Stratum PotentialTable::stratum(Eigen::Index i) const {
  if (!has_receipt()) throw Error(ErrorCode::missing_receipt, "table has no receipt outcomes");
  const int a = (*d1)[i];
  const int b = (*d0)[i];
  if (a == 1 && b == 1) return Stratum::always_taker;
  if (a == 0 && b == 0) return Stratum::never_taker;
  if (a == 1) return Stratum::complier;
  return Stratum::defier;
}

std::vector<Stratum> PotentialTable::strata() const {
  std::vector<Stratum> out(static_cast<std::size_t>(size()));
  for (Eigen::Index i = 0; i < size(); ++i) out[static_cast<std::size_t>(i)] = stratum(i);
  return out;
}

void PotentialTable::validate() const {
  if (y1.size() != y0.size()) {
    throw Error(ErrorCode::invalid_input, "potential outcome vectors differ in length");
  }
  if (d1.has_value() != d0.has_value()) {
    throw Error(ErrorCode::invalid_input, "receipt outcomes must be given for both arms");
  }
  if (!has_receipt()) return;
  if (d1->size() != y1.size() || d0->size() != y1.size()) {
    throw Error(ErrorCode::invalid_input, "receipt vectors differ in length from outcomes");
  }
  for (Eigen::Index i = 0; i < size(); ++i) {
    const int a = (*d1)[i];
    const int b = (*d0)[i];
    if ((a != 0 && a != 1) || (b != 0 && b != 1)) {
      throw Error(ErrorCode::invalid_input, "receipt entry " + std::to_string(i) + " not binary");
    }
    if (a < b) {
      throw Error(ErrorCode::invalid_input,
                  "unit " + std::to_string(i) + " is a defier (monotonicity violated)");
    }
  }
}

namespace {

bool is_constant(const Eigen::Ref<const Vector>& col) {
  return col.size() > 0 && (col.array() == col[0]).all();
}

}  // namespace

Dataset Dataset::with_intercept(const Matrix& covariates, IndexVector t, Vector y,
                                std::vector<std::string> names, std::optional<Matrix> w,
                                std::optional<IndexVector> d, std::vector<std::string> w_names) {
  const Eigen::Index n = y.size();
  if (covariates.rows() != n && covariates.cols() > 0) {
    throw Error(ErrorCode::invalid_input, "covariate rows differ from outcome length");
  }
  if (!names.empty() && static_cast<Eigen::Index>(names.size()) != covariates.cols()) {
    throw Error(ErrorCode::invalid_input, "covariate name count differs from column count");
  }
  for (Eigen::Index j = 0; j < covariates.cols(); ++j) {
    if (is_constant(covariates.col(j))) {
      const std::string label = names.empty() ? "column " + std::to_string(j)
                                              : "'" + names[static_cast<std::size_t>(j)] + "'";
      throw Error(ErrorCode::invalid_input,
                  "covariate " + label + " is constant; the intercept is added automatically");
    }
  }
  Dataset out;
  out.x.resize(n, covariates.cols() + 1);
  out.x.col(0).setOnes();
  if (covariates.cols() > 0) out.x.rightCols(covariates.cols()) = covariates;
  out.t = Assignment(std::move(t));
  out.y = std::move(y);
  out.x_names.push_back("intercept");
  for (Eigen::Index j = 0; j < covariates.cols(); ++j) {
    out.x_names.push_back(names.empty() ? "x" + std::to_string(j + 1)
                                        : names[static_cast<std::size_t>(j)]);
  }
  out.w = std::move(w);
  out.d = std::move(d);
  if (out.w && w_names.empty()) {
    for (Eigen::Index j = 0; j < out.w->cols(); ++j) w_names.push_back("w" + std::to_string(j + 1));
  }
  out.w_names = std::move(w_names);
  out.validate();
  return out;
}

void Dataset::validate() const {
  const Eigen::Index n = y.size();
  if (x.rows() != n || t.size() != n) {
    throw Error(ErrorCode::invalid_input, "dataset components differ in length");
  }
  if (x.cols() < 1 || !(x.col(0).array() == 1.0).all()) {
    throw Error(ErrorCode::invalid_input, "first covariate column must be the intercept");
  }
  if (!x.allFinite()) throw Error(ErrorCode::invalid_input, "covariates contain non-finite values");
  if (!y.allFinite()) throw Error(ErrorCode::invalid_input, "outcomes contain non-finite values");
  if (w) {
    if (w->rows() != n) throw Error(ErrorCode::invalid_input, "adjustment rows differ from n");
    if (!w->allFinite()) {
      throw Error(ErrorCode::invalid_input, "adjustment covariates contain non-finite values");
    }
  }
  if (d) {
    if (d->size() != n) throw Error(ErrorCode::invalid_input, "receipt length differs from n");
    for (Eigen::Index i = 0; i < n; ++i) {
      if ((*d)[i] != 0 && (*d)[i] != 1) {
        throw Error(ErrorCode::invalid_input, "receipt entry " + std::to_string(i) + " not binary");
      }
    }
  }
}

Dataset Dataset::with_covariates(const Matrix& covariates, std::vector<std::string> names) const {
  return with_intercept(covariates, t.values(), y, std::move(names), w, d, w_names);
}

Dataset Dataset::observe(const PotentialTable& table, const Matrix& x_with_intercept,
                         const Assignment& t) {
  table.validate();
  Dataset out;
  out.x = x_with_intercept;
  out.t = t;
  const Eigen::Index n = table.size();
  out.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) out.y[i] = t.treated(i) ? table.y1[i] : table.y0[i];
  if (table.has_receipt()) {
    IndexVector d(n);
    for (Eigen::Index i = 0; i < n; ++i) d[i] = t.treated(i) ? (*table.d1)[i] : (*table.d0)[i];
    out.d = std::move(d);
  }
  out.x_names.push_back("intercept");
  for (Eigen::Index j = 1; j < out.x.cols(); ++j) out.x_names.push_back("x" + std::to_string(j));
  out.validate();
  return out;
}

}  // namespace hetfx
