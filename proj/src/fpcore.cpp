#include "hetfx/fpcore.hpp"

#include <cmath>
#include <numeric>

namespace hetfx {

StepDistribution StepDistribution::empirical(const Eigen::Ref<const Vector>& sample) {
  const auto n = static_cast<std::size_t>(sample.size());
  if (n == 0) throw Error(ErrorCode::insufficient_data, "empirical distribution of empty sample");
  StepDistribution out;
  out.support_.assign(sample.data(), sample.data() + n);
  std::stable_sort(out.support_.begin(), out.support_.end());
  out.cdf_.resize(n);
  // Computed directly (not accumulated) so equal fractions compare equal.
  for (std::size_t k = 0; k < n; ++k) {
    out.cdf_[k] = static_cast<double>(k + 1) / static_cast<double>(n);
  }
  return out;
}

StepDistribution StepDistribution::from_cdf(std::vector<double> support, std::vector<double> cdf) {
  if (support.size() != cdf.size() || support.empty()) {
    throw Error(ErrorCode::invalid_input, "step distribution needs matching nonempty arrays");
  }
  StepDistribution out;
  double previous = 0.0;
  for (std::size_t k = 0; k < support.size(); ++k) {
    if (k > 0 && support[k] < support[k - 1]) {
      throw Error(ErrorCode::invalid_input, "step distribution support must be ascending");
    }
    if (cdf[k] < previous) {
      throw Error(ErrorCode::invalid_input, "step distribution CDF must be nondecreasing");
    }
    if (cdf[k] > previous) {
      out.support_.push_back(support[k]);
      out.cdf_.push_back(cdf[k]);
      previous = cdf[k];
    }
  }
  if (out.cdf_.empty() || previous <= 0.0) {
    throw Error(ErrorCode::degenerate_sample, "step distribution carries no mass");
  }
  out.cdf_.back() = 1.0;
  return out;
}

double StepDistribution::mean() const {
  double total = 0.0;
  double previous = 0.0;
  for (std::size_t k = 0; k < support_.size(); ++k) {
    total += (cdf_[k] - previous) * support_[k];
    previous = cdf_[k];
  }
  return total;
}

double StepDistribution::variance() const {
  const double mu = mean();
  double total = 0.0;
  double previous = 0.0;
  for (std::size_t k = 0; k < support_.size(); ++k) {
    const double dev = support_[k] - mu;
    total += (cdf_[k] - previous) * dev * dev;
    previous = cdf_[k];
  }
  return total;
}

double StepDistribution::cdf_at(double y) const {
  const auto it = std::upper_bound(support_.begin(), support_.end(), y);
  if (it == support_.begin()) return 0.0;
  return cdf_[static_cast<std::size_t>(it - support_.begin()) - 1];
}

double StepDistribution::quantile(double u) const {
  if (!(u > 0.0) || u > 1.0) throw Error(ErrorCode::domain, "quantile level must be in (0, 1]");
  const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
  if (it == cdf_.end()) return support_.back();
  return support_[static_cast<std::size_t>(it - cdf_.begin())];
}

StepDistribution StepDistribution::shifted(double delta) const {
  StepDistribution out = *this;
  for (double& v : out.support_) v += delta;
  return out;
}

namespace {

// Integrates {qa(u) - qb(u)}^2 where qa walks atoms of `a` upward and qb walks
// atoms of `b` either upward (matched) or downward (antimatched).
double integrate_pairing(const StepDistribution& a, const StepDistribution& b,
                         QuantilePairing mode) {
  const auto& va = a.support();
  const auto& ca = a.cdf();
  const auto& vb = b.support();
  const auto& cb = b.cdf();
  const std::size_t na = va.size();
  const std::size_t nb = vb.size();

  // Upper u-breakpoint of the j-th atom visited in b.
  auto b_end = [&](std::size_t j) {
    if (mode == QuantilePairing::matched) return cb[j];
    // Visiting atom nb-1-j: it covers u in (1 - cb[nb-1-j], 1 - cb[nb-2-j]].
    const std::size_t atom = nb - 1 - j;
    return atom == 0 ? 1.0 : 1.0 - cb[atom - 1];
  };
  auto b_value = [&](std::size_t j) {
    return mode == QuantilePairing::matched ? vb[j] : vb[nb - 1 - j];
  };

  double total = 0.0;
  double u = 0.0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < na && j < nb) {
    const double end_a = ca[i];
    const double end_b = b_end(j);
    const double next = std::min(end_a, end_b);
    const double diff = va[i] - b_value(j);
    if (next > u) total += (next - u) * diff * diff;
    u = std::max(u, next);
    if (end_a <= next) ++i;
    if (end_b <= next) ++j;
  }
  return total;
}

}  // namespace

double quantile_integral(const StepDistribution& first, const StepDistribution& second,
                         QuantilePairing mode) {
  if (first.atoms() == 0 || second.atoms() == 0) {
    throw Error(ErrorCode::insufficient_data, "quantile integral of an empty distribution");
  }
  return integrate_pairing(first, second, mode);
}

double quantile_integral(const Eigen::Ref<const Vector>& sample1,
                         const Eigen::Ref<const Vector>& sample0, QuantilePairing mode) {
  if (sample1.size() == 0 || sample0.size() == 0) {
    throw Error(ErrorCode::insufficient_data, "quantile integral of an empty sample");
  }
  return integrate_pairing(StepDistribution::empirical(sample1),
                           StepDistribution::empirical(sample0), mode);
}

}  // namespace hetfx
