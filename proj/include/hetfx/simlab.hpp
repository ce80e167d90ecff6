#pragma once

// Simulation designs for systematic-variation tests and the power-study
// harness.

#include "hetfx/dataset.hpp"
#include "hetfx/itt.hpp"

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace hetfx {

/// a: constant effect; b: systematic variation; c: idiosyncratic only;
/// d: systematic plus idiosyncratic.
enum class Scenario { a, b, c, d };

std::string_view to_string(Scenario scenario);
std::optional<Scenario> parse_scenario(std::string_view name);

/// Multinomial logit for compliance strata with compliers as the base:
///   log(P(a)/P(c)) = a0 + a1 X1,  log(P(n)/P(c)) = n0 + n1 X1 + n3 X3.
/// The intercepts put the population shares at about c 0.68, a 0.13, n 0.19.
struct StrataModel {
  double a0 = -1.78463275;
  double a1 = 0.5;
  double n0 = -1.51574435;
  double n1 = -0.5;
  double n3 = 0.5;
};

struct SimConfig {
  Scenario scenario = Scenario::a;
  Eigen::Index n = 1000;
  long long reps = 1000;
  std::uint64_t seed = 20160101;
  double treat_prob = 0.6;
  bool noncompliance = false;
  std::vector<EstimatorMethod> estimators{EstimatorMethod::ri, EstimatorMethod::ols,
                                          EstimatorMethod::ri_adjusted};
  double alpha = 0.05;
  StrataModel strata;

  void validate() const;
  Eigen::Index n1() const;
};

/// Covariates X1..X4 used by the designs.
struct SimUnits {
  Matrix covariates;  // n x 4
  Vector y0;
  Vector delta;    // systematic effect
  Vector epsilon;  // idiosyncratic effect
};

struct SimDraw {
  Dataset data;
  PotentialTable table;
  Matrix x;  // intercept, X1, X2, X3
};

/// Complete-data draw for replication `rep`: x = (1, X1, X2, X3), adjustment
/// covariates w = (X1, X2, X3, X4), n1 = round(treat_prob * n).
SimDraw generate_itt_dataset(const SimConfig& config, long long rep);

/// As above with compliance strata drawn from `config.strata`; always takers
/// get Y(0) = Y(1) and never takers Y(1) = Y(0).
SimDraw generate_late_dataset(const SimConfig& config, long long rep);

/// Dispatches on `config.noncompliance`.
SimDraw generate_dataset(const SimConfig& config, long long rep);

/// Seed of replication `rep`.
std::uint64_t replication_seed(const SimConfig& config, long long rep);

struct EstimatorPower {
  EstimatorMethod method = EstimatorMethod::ri;
  long long rejections = 0;
  long long failures = 0;   // fits or tests that raised an error
  long long completed = 0;  // reps - failures
  double rate = 0.0;        // rejections / completed
  double mc_se = 0.0;       // sqrt(rate (1 - rate) / completed)
};

struct SimResult {
  SimConfig config;
  std::vector<EstimatorPower> estimators;
  std::vector<std::uint64_t> rep_seeds;
};

/// Runs `config.reps` replications of generate, fit, omnibus test. The result
/// is identical for any thread count.
SimResult power_study(const SimConfig& config);

}  // namespace hetfx
