#pragma once

// Hypothesis tests for systematic variation: the omnibus Wald test and
// Fisher randomization tests of sharp nulls with their confidence regions.

#include "hetfx/itt.hpp"
#include "hetfx/latemod.hpp"
#include "hetfx/test_result.hpp"

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace hetfx {

/// Wald statistic over the non-intercept coordinates, referred to chi2(K-1).
/// Rejects when the statistic exceeds the 1 - alpha quantile.
TestResult omnibus_test(const Vector& beta, const Matrix& cov, double alpha);
TestResult omnibus_test(const BetaEstimate& est, double alpha);
TestResult omnibus_test(const LateEstimate& est, double alpha);

enum class RandomizationStatistic { diff_means, diff_medians, ks };

std::string_view to_string(RandomizationStatistic statistic);
std::optional<RandomizationStatistic> parse_statistic(std::string_view name);

enum class RandomizationMode {
  automatic,    // exhaustive when C(n, n1) <= kExhaustiveLimit
  monte_carlo,
  exhaustive,
};

inline constexpr double kExhaustiveLimit = 1e6;
inline constexpr long long kMinDraws = 100;

struct RandomizationOptions {
  RandomizationStatistic statistic = RandomizationStatistic::diff_means;
  long long draws = 1000;
  std::uint64_t seed = 0;
  double alpha = 0.05;
  RandomizationMode mode = RandomizationMode::automatic;
};

/// Test of the sharp null Y_i(1) - Y_i(0) = X_i' beta0 for every unit.
///
/// Missing potential outcomes are imputed under the null, so the statistic
/// of each redrawn assignment compares r_i = Y_i - T_i X_i' beta0 across the
/// redrawn arms. Monte Carlo p = (1 + #{|t*| >= |t_obs|}) / (draws + 1);
/// exhaustive p is the exact share of assignments at least as extreme.
/// The test rejects when p <= alpha.
TestResult fisher_randomization_test(const Dataset& data, const Vector& beta0,
                                     const RandomizationOptions& options);

struct ConfidenceRegion {
  std::vector<Vector> candidates;
  std::vector<double> p_values;
  std::vector<bool> accepted;
  double alpha = 0.05;
  std::string statistic_name;

  /// True when no accepted candidate has every non-intercept coordinate
  /// equal to zero, i.e. the supplied slice {beta_1 = 0} misses the region.
  bool excludes_no_systematic_variation() const;
  std::size_t accepted_count() const;
};

/// Inverts the randomization test over `candidates`, each tested with the
/// same seed. Accepted means p > alpha.
ConfidenceRegion fisher_confidence_region(const Dataset& data, const std::vector<Vector>& candidates,
                                          const RandomizationOptions& options);

/// `points` candidates spanning center[coord] +/- width * se[coord], all other
/// coordinates held at `center`.
std::vector<Vector> coordinate_grid(const Vector& center, const Vector& se, Eigen::Index coord,
                                    int points, double width = 4.0);

}  // namespace hetfx
