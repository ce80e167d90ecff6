#include "hetfx/simlab.hpp"

#include "hetfx/latemod.hpp"
#include "hetfx/parallel.hpp"
#include "hetfx/rtests.hpp"

#include <cmath>
#include <random>

namespace hetfx {

std::string_view to_string(Scenario scenario) {
  switch (scenario) {
    case Scenario::a: return "a";
    case Scenario::b: return "b";
    case Scenario::c: return "c";
    case Scenario::d: return "d";
  }
  return "unknown";
}

std::optional<Scenario> parse_scenario(std::string_view name) {
  for (auto s : {Scenario::a, Scenario::b, Scenario::c, Scenario::d}) {
    if (name == to_string(s)) return s;
  }
  return std::nullopt;
}

void SimConfig::validate() const {
  if (n < 50) throw Error(ErrorCode::invalid_input, "simulation needs n >= 50");
  if (reps < 1) throw Error(ErrorCode::invalid_input, "simulation needs reps >= 1");
  if (!(treat_prob > 0.0 && treat_prob < 1.0)) {
    throw Error(ErrorCode::invalid_input, "treat_prob must be in (0, 1)");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::domain, "alpha must be in (0, 1)");
  const Eigen::Index treated = n1();
  if (treated < 1 || treated >= n) throw Error(ErrorCode::invalid_input, "both arms must be nonempty");
  for (auto m : estimators) {
    if (is_late_method(m) && !noncompliance) {
      throw Error(ErrorCode::invalid_input,
                  std::string(to_string(m)) + " needs the noncompliance design");
    }
  }
}

Eigen::Index SimConfig::n1() const {
  return static_cast<Eigen::Index>(std::llround(treat_prob * static_cast<double>(n)));
}

std::uint64_t replication_seed(const SimConfig& config, long long rep) {
  return derive_seed(config.seed, static_cast<std::uint64_t>(rep));
}

namespace {

constexpr double kNoiseVariance = 0.26;
constexpr double kIdiosyncraticSd = 0.2;

bool systematic(Scenario s) { return s == Scenario::b || s == Scenario::d; }
bool idiosyncratic(Scenario s) { return s == Scenario::c || s == Scenario::d; }

SimUnits draw_units(const SimConfig& config, SplitMix64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution half(0.5);
  std::bernoulli_distribution quarter(0.25);
  const double noise_sd = std::sqrt(kNoiseVariance);

  SimUnits u;
  u.covariates.resize(config.n, 4);
  u.y0.resize(config.n);
  u.delta.resize(config.n);
  u.epsilon.resize(config.n);
  for (Eigen::Index i = 0; i < config.n; ++i) {
    const double x1 = normal(rng);
    const double x2 = half(rng) ? 1.0 : 0.0;
    const double x3 = quarter(rng) ? 1.0 : 0.0;
    const double x4 = normal(rng);
    u.covariates.row(i) << x1, x2, x3, x4;
    u.y0[i] = 0.3 + 0.2 * x1 + 0.3 * x2 - 0.4 * x3 + 0.8 * x4 + noise_sd * normal(rng);
    u.delta[i] = systematic(config.scenario) ? 0.2 + 0.1 * x1 + 0.4 * x3 : 0.3;
    u.epsilon[i] = idiosyncratic(config.scenario) ? kIdiosyncraticSd * normal(rng) : 0.0;
  }
  return u;
}

Matrix design_x(const Matrix& covariates) {
  Matrix x(covariates.rows(), 4);
  x.col(0).setOnes();
  x.rightCols(3) = covariates.leftCols(3);
  return x;
}

SimDraw finish(const SimConfig& config, const SimUnits& units, PotentialTable table, SplitMix64& rng) {
  SimDraw out;
  out.x = design_x(units.covariates);
  const Assignment t(draw_assignment(config.n, config.n1(), rng));
  out.data = Dataset::observe(table, out.x, t);
  out.data.x_names = {"intercept", "X1", "X2", "X3"};
  out.data.w = units.covariates;
  out.data.w_names = {"X1", "X2", "X3", "X4"};
  out.table = std::move(table);
  return out;
}

}  // namespace

SimDraw generate_itt_dataset(const SimConfig& config, long long rep) {
  config.validate();
  SplitMix64 rng(replication_seed(config, rep));
  const SimUnits units = draw_units(config, rng);
  PotentialTable table;
  table.y0 = units.y0;
  table.y1 = units.y0 + units.delta + units.epsilon;
  return finish(config, units, std::move(table), rng);
}

SimDraw generate_late_dataset(const SimConfig& config, long long rep) {
  config.validate();
  if (!config.noncompliance) {
    throw Error(ErrorCode::invalid_input, "noncompliance design requested without the flag");
  }
  SplitMix64 rng(replication_seed(config, rep));
  const SimUnits units = draw_units(config, rng);
  PotentialTable table;
  table.y0 = units.y0;
  table.y1 = units.y0 + units.delta + units.epsilon;
  IndexVector d1(config.n);
  IndexVector d0(config.n);
  const StrataModel& m = config.strata;
  for (Eigen::Index i = 0; i < config.n; ++i) {
    const double x1 = units.covariates(i, 0);
    const double x3 = units.covariates(i, 2);
    const double ea = std::exp(m.a0 + m.a1 * x1);
    const double en = std::exp(m.n0 + m.n1 * x1 + m.n3 * x3);
    const double u = rng.uniform() * (1.0 + ea + en);
    if (u < 1.0) {  // complier
      d1[i] = 1;
      d0[i] = 0;
    } else if (u < 1.0 + ea) {  // always taker
      d1[i] = 1;
      d0[i] = 1;
      table.y0[i] = table.y1[i];
    } else {  // never taker
      d1[i] = 0;
      d0[i] = 0;
      table.y1[i] = table.y0[i];
    }
  }
  table.d1 = std::move(d1);
  table.d0 = std::move(d0);
  return finish(config, units, std::move(table), rng);
}

SimDraw generate_dataset(const SimConfig& config, long long rep) {
  return config.noncompliance ? generate_late_dataset(config, rep) : generate_itt_dataset(config, rep);
}

namespace {

bool fit_and_test(EstimatorMethod method, const Dataset& data, double alpha) {
  switch (method) {
    case EstimatorMethod::ri: return omnibus_test(estimate_beta_ri(data), alpha).reject;
    case EstimatorMethod::ols: return omnibus_test(estimate_beta_ols(data), alpha).reject;
    case EstimatorMethod::ri_adjusted:
      return omnibus_test(estimate_beta_ri_adjusted(data), alpha).reject;
    case EstimatorMethod::ri_complier: return omnibus_test(estimate_beta_c_ri(data), alpha).reject;
    case EstimatorMethod::tsls: return omnibus_test(estimate_beta_tsls(data), alpha).reject;
  }
  return false;
}

}  // namespace

SimResult power_study(const SimConfig& config) {
  config.validate();
  if (config.estimators.empty()) throw Error(ErrorCode::invalid_input, "no estimators requested");
  const auto reps = static_cast<std::size_t>(config.reps);
  const std::size_t m = config.estimators.size();
  // outcome[rep * m + j]: 1 reject, 0 accept, -1 failure
  std::vector<signed char> outcome(reps * m, 0);
  parallel_for(reps, [&](std::size_t rep) {
    const SimDraw draw = generate_dataset(config, static_cast<long long>(rep));
    for (std::size_t j = 0; j < m; ++j) {
      signed char value;
      try {
        value = fit_and_test(config.estimators[j], draw.data, config.alpha) ? 1 : 0;
      } catch (const Error&) {
        value = -1;
      }
      outcome[rep * m + j] = value;
    }
  });

  SimResult out;
  out.config = config;
  out.rep_seeds.reserve(reps);
  for (std::size_t rep = 0; rep < reps; ++rep) {
    out.rep_seeds.push_back(replication_seed(config, static_cast<long long>(rep)));
  }
  for (std::size_t j = 0; j < m; ++j) {
    EstimatorPower p;
    p.method = config.estimators[j];
    for (std::size_t rep = 0; rep < reps; ++rep) {
      const signed char v = outcome[rep * m + j];
      if (v < 0) {
        ++p.failures;
      } else {
        p.rejections += v;
      }
    }
    p.completed = config.reps - p.failures;
    if (p.completed > 0) {
      p.rate = static_cast<double>(p.rejections) / static_cast<double>(p.completed);
      p.mc_se = std::sqrt(p.rate * (1.0 - p.rate) / static_cast<double>(p.completed));
    }
    out.estimators.push_back(p);
  }
  return out;
}

}  // namespace hetfx
