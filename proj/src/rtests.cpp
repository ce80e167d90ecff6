#include "hetfx/rtests.hpp"

#include "hetfx/linalg.hpp"
#include "hetfx/parallel.hpp"
#include "hetfx/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hetfx {

TestResult omnibus_test(const Vector& beta, const Matrix& cov, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::domain, "alpha must be in (0, 1)");
  const Eigen::Index k = beta.size();
  if (cov.rows() != k || cov.cols() != k) {
    throw Error(ErrorCode::invalid_input, "covariance does not match the coefficient vector");
  }
  if (k < 2) {
    throw Error(ErrorCode::nothing_to_test, "omnibus test needs at least one non-intercept covariate");
  }
  const Vector b1 = beta.tail(k - 1);
  const SymmetricSolver solver(cov.bottomRightCorner(k - 1, k - 1),
                               "covariance of the non-intercept coefficients");
  const int df = static_cast<int>(k - 1);
  const ChiSquare chi2(df);

  TestResult out;
  out.name = "omnibus_wald";
  out.reference = "chi2";
  out.df = df;
  out.alpha = alpha;
  out.statistic = std::max(0.0, b1.dot(solver.solve(b1)));
  out.p_value = chi2.survival(out.statistic);
  out.reject = out.statistic > chi2.inverse_survival(alpha);
  return out;
}

TestResult omnibus_test(const BetaEstimate& est, double alpha) {
  return omnibus_test(est.beta, est.cov, alpha);
}

TestResult omnibus_test(const LateEstimate& est, double alpha) {
  return omnibus_test(est.beta_c, est.cov, alpha);
}

std::string_view to_string(RandomizationStatistic statistic) {
  switch (statistic) {
    case RandomizationStatistic::diff_means: return "diff_means";
    case RandomizationStatistic::diff_medians: return "diff_medians";
    case RandomizationStatistic::ks: return "ks";
  }
  return "unknown";
}

std::optional<RandomizationStatistic> parse_statistic(std::string_view name) {
  for (auto s : {RandomizationStatistic::diff_means, RandomizationStatistic::diff_medians,
                 RandomizationStatistic::ks}) {
    if (name == to_string(s)) return s;
  }
  return std::nullopt;
}

namespace {

double median_of(std::vector<double>& v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

// Evaluates a two-sample statistic of the null-imputed outcomes for any
// assignment vector.
class StatisticEngine {
 public:
  StatisticEngine(Vector r, Eigen::Index n1, RandomizationStatistic kind)
      : r_(std::move(r)), n1_(n1), kind_(kind) {
    total_ = r_.sum();
    if (kind_ == RandomizationStatistic::ks) {
      order_.resize(static_cast<std::size_t>(r_.size()));
      std::iota(order_.begin(), order_.end(), Eigen::Index{0});
      std::stable_sort(order_.begin(), order_.end(), [&](auto a, auto b) { return r_[a] < r_[b]; });
      group_end_.resize(order_.size());
      for (std::size_t k = 0; k < order_.size(); ++k) {
        group_end_[k] = k + 1 == order_.size() || r_[order_[k + 1]] != r_[order_[k]];
      }
    }
  }

  struct Scratch {
    std::vector<double> treated;
    std::vector<double> control;
  };

  double operator()(const IndexVector& t, Scratch& scratch) const {
    const double n1 = static_cast<double>(n1_);
    const double n0 = static_cast<double>(r_.size() - n1_);
    switch (kind_) {
      case RandomizationStatistic::diff_means: {
        double s1 = 0.0;
        for (Eigen::Index i = 0; i < r_.size(); ++i) {
          if (t[i] == 1) s1 += r_[i];
        }
        return s1 / n1 - (total_ - s1) / n0;
      }
      case RandomizationStatistic::diff_medians: {
        scratch.treated.clear();
        scratch.control.clear();
        for (Eigen::Index i = 0; i < r_.size(); ++i) {
          (t[i] == 1 ? scratch.treated : scratch.control).push_back(r_[i]);
        }
        return median_of(scratch.treated) - median_of(scratch.control);
      }
      case RandomizationStatistic::ks: {
        double c1 = 0.0, c0 = 0.0, sup = 0.0;
        for (std::size_t k = 0; k < order_.size(); ++k) {
          (t[order_[k]] == 1 ? c1 : c0) += 1.0;
          if (group_end_[k]) sup = std::max(sup, std::abs(c1 / n1 - c0 / n0));
        }
        return sup;
      }
    }
    return 0.0;
  }

 private:
  Vector r_;
  Eigen::Index n1_;
  RandomizationStatistic kind_;
  double total_ = 0.0;
  std::vector<Eigen::Index> order_;
  std::vector<char> group_end_;
};

double log_binomial(Eigen::Index n, Eigen::Index k) {
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

}  // namespace

TestResult fisher_randomization_test(const Dataset& data, const Vector& beta0,
                                     const RandomizationOptions& options) {
  if (beta0.size() != data.k()) {
    throw Error(ErrorCode::invalid_input, "null coefficient vector must have one entry per covariate");
  }
  if (options.draws < kMinDraws) {
    throw Error(ErrorCode::domain, "randomization test needs at least " +
                                       std::to_string(kMinDraws) + " draws");
  }
  if (!(options.alpha >= 0.0 && options.alpha < 1.0)) {
    throw Error(ErrorCode::domain, "alpha must be in [0, 1)");
  }
  const Eigen::Index n = data.n();
  const Eigen::Index n1 = data.t.n1();
  const Vector imputed_effect = data.x * beta0;
  Vector r = data.y;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (data.t.treated(i)) r[i] -= imputed_effect[i];
  }
  const StatisticEngine engine(std::move(r), n1, options.statistic);
  StatisticEngine::Scratch scratch;
  const double observed = std::abs(engine(data.t.values(), scratch));
  const double threshold = observed - 1e-10 * (1.0 + observed);

  const double log_count = log_binomial(n, n1);
  const bool exhaustive =
      options.mode == RandomizationMode::exhaustive ||
      (options.mode == RandomizationMode::automatic && log_count <= std::log(kExhaustiveLimit) + 1e-9);

  TestResult out;
  out.name = "fisher_" + std::string(to_string(options.statistic));
  out.reference = exhaustive ? "randomization_exact" : "randomization";
  out.alpha = options.alpha;
  out.statistic = observed;

  if (exhaustive) {
    if (log_count > std::log(1e8)) {
      throw Error(ErrorCode::domain, "too many assignments to enumerate");
    }
    std::vector<Eigen::Index> pick(static_cast<std::size_t>(n1));
    std::iota(pick.begin(), pick.end(), Eigen::Index{0});
    IndexVector t = IndexVector::Zero(n);
    long long total = 0, extreme = 0;
    while (true) {
      t.setZero();
      for (auto i : pick) t[i] = 1;
      ++total;
      if (std::abs(engine(t, scratch)) >= threshold) ++extreme;
      // Next n1-subset in lexicographic order.
      auto k = static_cast<std::ptrdiff_t>(n1) - 1;
      while (k >= 0 && pick[static_cast<std::size_t>(k)] == n - n1 + k) --k;
      if (k < 0) break;
      ++pick[static_cast<std::size_t>(k)];
      for (auto j = static_cast<std::size_t>(k) + 1; j < pick.size(); ++j) pick[j] = pick[j - 1] + 1;
    }
    out.draws = total;
    out.p_value = static_cast<double>(extreme) / static_cast<double>(total);
  } else {
    const auto draws = static_cast<std::size_t>(options.draws);
    const std::size_t chunks = std::min<std::size_t>(draws, 256);
    std::vector<long long> counts(chunks, 0);
    parallel_for(chunks, [&](std::size_t c) {
      StatisticEngine::Scratch local;
      const std::size_t begin = draws * c / chunks;
      const std::size_t end = draws * (c + 1) / chunks;
      long long hits = 0;
      for (std::size_t d = begin; d < end; ++d) {
        SplitMix64 rng(derive_seed(options.seed, d));
        const IndexVector t = draw_assignment(n, n1, rng);
        if (std::abs(engine(t, local)) >= threshold) ++hits;
      }
      counts[c] = hits;
    });
    const long long extreme = std::accumulate(counts.begin(), counts.end(), 0LL);
    out.draws = options.draws;
    out.p_value = static_cast<double>(1 + extreme) / static_cast<double>(options.draws + 1);
  }
  out.reject = out.p_value <= options.alpha;
  return out;
}

bool ConfidenceRegion::excludes_no_systematic_variation() const {
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    if (!accepted[c]) continue;
    const Vector& b = candidates[c];
    if (b.size() < 2 || b.tail(b.size() - 1).cwiseAbs().maxCoeff() == 0.0) return false;
  }
  return true;
}

std::size_t ConfidenceRegion::accepted_count() const {
  return static_cast<std::size_t>(std::count(accepted.begin(), accepted.end(), true));
}

ConfidenceRegion fisher_confidence_region(const Dataset& data, const std::vector<Vector>& candidates,
                                          const RandomizationOptions& options) {
  if (candidates.empty()) throw Error(ErrorCode::invalid_input, "candidate list is empty");
  ConfidenceRegion out;
  out.alpha = options.alpha;
  out.statistic_name = std::string(to_string(options.statistic));
  out.candidates = candidates;
  for (const Vector& beta0 : candidates) {
    const TestResult r = fisher_randomization_test(data, beta0, options);
    out.p_values.push_back(r.p_value);
    out.accepted.push_back(r.p_value > options.alpha);
  }
  return out;
}

std::vector<Vector> coordinate_grid(const Vector& center, const Vector& se, Eigen::Index coord,
                                    int points, double width) {
  if (coord < 0 || coord >= center.size() || se.size() != center.size()) {
    throw Error(ErrorCode::invalid_input, "grid coordinate out of range");
  }
  if (points < 2 || !(width > 0.0)) throw Error(ErrorCode::domain, "grid needs >= 2 points and width > 0");
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(points));
  const double lo = center[coord] - width * se[coord];
  const double step = 2.0 * width * se[coord] / (points - 1);
  for (int p = 0; p < points; ++p) {
    Vector b = center;
    b[coord] = lo + step * p;
    out.push_back(std::move(b));
  }
  return out;
}

}  // namespace hetfx
