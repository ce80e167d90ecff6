// Acceptance gate: one PASS/FAIL line per criterion; exit status 1 if any fails.

#include "oracles.hpp"

#include "hetfx/decomp.hpp"
#include "hetfx/fpcore.hpp"
#include "hetfx/latemod.hpp"
#include "hetfx/population.hpp"
#include "hetfx/rtests.hpp"
#include "hetfx/simlab.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>

using namespace hetfx;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail << "first failure: " << what << "; ";
    pass = pass && ok;
  }
};

using Criterion = std::function<void(Outcome&)>;

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double max_abs(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

const EstimatorPower& find(const SimResult& r, EstimatorMethod m) {
  for (const auto& e : r.estimators)
    if (e.method == m) return e;
  throw Error(ErrorCode::invalid_input, "estimator missing from result");
}

SimResult study(Scenario s, Eigen::Index n, long long reps, std::vector<EstimatorMethod> est,
                bool noncompliance = false) {
  SimConfig c;
  c.scenario = s;
  c.n = n;
  c.reps = reps;
  c.estimators = std::move(est);
  c.noncompliance = noncompliance;
  return power_study(c);
}

// Complete table with strata: compliers get y1 = y0 + effect, everyone else
// y1 = y0. No defiers.
PotentialTable strata_table(std::mt19937_64& rng, const Matrix& x) {
  PotentialTable table = oracle::random_table(rng, x);
  std::uniform_real_distribution<double> u;
  const auto n = x.rows();
  IndexVector d1(n), d0(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double draw = u(rng);
    d1[i] = draw < 0.85 ? 1 : 0;  // never takers above 0.85
    d0[i] = draw < 0.15 ? 1 : 0;  // always takers below 0.15
    if (d1[i] == d0[i]) table.y1[i] = table.y0[i];
  }
  table.d1 = d1;
  table.d0 = d0;
  return table;
}

void c1_exhaustive(Outcome& o) {
  std::mt19937_64 rng(1001);
  const auto start = std::chrono::steady_clock::now();
  double worst_tau = 0.0, worst_beta = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const Matrix x = oracle::random_design(rng, 6, 2);
    const PotentialTable table = oracle::random_table(rng, x);
    Matrix v1(6, 2), v0(6, 2);
    for (int i = 0; i < 6; ++i) {
      v1.row(i) = table.y1[i] * x.row(i);
      v0.row(i) = table.y0[i] * x.row(i);
    }
    const Vector tau_v = (v1.colwise().mean() - v0.colwise().mean()).transpose();
    const Vector beta = population_decomposition(x, table).beta;
    Vector mean_tau = Vector::Zero(2), mean_beta = Vector::Zero(2);
    long long count = 0;
    oracle::for_each_assignment(6, 3, [&](const IndexVector& t) {
      const Assignment a(t);
      Matrix obs(6, 2);
      for (int i = 0; i < 6; ++i) obs.row(i) = t[i] ? v1.row(i) : v0.row(i);
      mean_tau += neyman_vector(obs, a).tau;
      mean_beta += estimate_beta_ri(Dataset::observe(table, x, a)).beta;
      ++count;
    });
    o.require(count == 20, "20 assignments enumerated");
    worst_tau = std::max(worst_tau, max_abs(mean_tau / 20.0 - tau_v));
    worst_beta = std::max(worst_beta, max_abs(mean_beta / 20.0 - beta));
  }
  const double elapsed = seconds_since(start);
  o.require(worst_tau < 1e-10, "mean tau_V");
  o.require(worst_beta < 1e-10, "mean beta_RI");
  o.require(elapsed < 1.0, "runtime");
  o.detail << "max|tau err|=" << worst_tau << " max|beta err|=" << worst_beta << " time=" << elapsed
           << "s";
}

void c2_neyman(Outcome& o) {
  std::mt19937_64 rng(1002);
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const Dataset d = oracle::random_dataset(rng, 30 + rep, 1, 0.4);
    const BetaEstimate est = estimate_beta_ri(d);
    double s1 = 0, s0 = 0, m1 = 0, m0 = 0;
    const double n1 = d.t.n1(), n0 = d.t.n0();
    for (Eigen::Index i = 0; i < d.n(); ++i) (d.t.treated(i) ? m1 : m0) += d.y[i];
    m1 /= n1;
    m0 /= n0;
    for (Eigen::Index i = 0; i < d.n(); ++i) {
      (d.t.treated(i) ? s1 : s0) += std::pow(d.y[i] - (d.t.treated(i) ? m1 : m0), 2);
    }
    const double var = s1 / (n1 - 1) / n1 + s0 / (n0 - 1) / n0;
    worst = std::max({worst, std::abs(est.beta[0] - (m1 - m0)) / std::max(1.0, std::abs(m1 - m0)),
                      std::abs(est.cov(0, 0) - var) / var});
  }
  o.require(worst < 1e-13, "difference in means and its variance");
  o.detail << "max relative deviation=" << worst;
}

void c3_ols(Outcome& o) {
  std::mt19937_64 rng(1003);
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const Dataset d = oracle::random_dataset(rng, 50, 4, 0.5);
    worst = std::max(worst, max_abs(estimate_beta_ols(d).beta - oracle::interacted_ols(d)));
  }
  o.require(worst < 1e-9, "OLS vs normal equations");
  o.detail << "max|diff|=" << worst;
}

Vector arm_centered(const Vector& r, const Assignment& t, int arm) {
  Vector out(t.arm_size(arm));
  for (Eigen::Index i = 0, k = 0; i < r.size(); ++i)
    if (t[i] == arm) out[k++] = r[i];
  return out.array() - out.mean();
}

void c4_frechet(Outcome& o) {
  std::mt19937_64 rng(1004);
  double worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const Dataset d = oracle::random_dataset(rng, 2 * (10 + rep), 2, 0.5);
    const BetaEstimate est = estimate_beta_ri(d);
    const VariationDecomposition dec = decompose_itt(d, est, false);
    const Vector e1 = arm_centered(est.residuals, d.t, 1);
    const Vector e0 = arm_centered(est.residuals, d.t, 0);
    worst = std::max({worst, std::abs(dec.see_lower - oracle::paired_variance(e1, e0, false)),
                      std::abs(dec.see_upper_frechet - oracle::paired_variance(e1, e0, true))});
  }
  o.require(worst < 1e-12, "equal-size pairing");
  int violations = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const Eigen::Index n = 12 + rep % 37;
    const Dataset d = oracle::random_dataset(rng, n, 2, 0.25 + 0.5 * ((rep * 7) % 11) / 10.0);
    if (d.t.n1() == d.t.n0()) continue;
    const VariationDecomposition dec = decompose_itt(d, estimate_beta_ri(d), false);
    const double indep = dec.v1 + dec.v0;
    violations += !(dec.see_lower <= indep + 1e-12 && indep <= dec.see_upper_frechet + 1e-12);
  }
  o.require(violations == 0, "unequal-size ordering");
  o.detail << "max|pairing diff|=" << worst << " ordering violations=" << violations << "/1000";
}

void c5_sensitivity(Outcome& o) {
  std::mt19937_64 rng(1005);
  double worst = 0.0;
  int tested = 0, monotone_failures = 0;
  for (int rep = 0; rep < 50; ++rep) {
    const Dataset d = oracle::random_dataset(rng, 60, 3, 0.5);
    const VariationDecomposition dec =
        decompose_itt(d, estimate_beta_ols(d), false, make_rho_grid(0.0, 1.0, 0.05));
    const auto mid = sensitivity_curve(dec, {0.0, 0.5, 1.0});
    worst = std::max(worst, std::abs(mid[1].see - 0.5 * (mid[0].see + mid[2].see)));
    if (dec.s_dd > 0.0 && dec.see_lower < dec.v1 + dec.v0) {
      ++tested;
      for (std::size_t g = 1; g < dec.rho_curve.size(); ++g) {
        const auto& a = dec.rho_curve[g - 1];
        const auto& b = dec.rho_curve[g];
        monotone_failures += !(a.r2 && b.r2 && *b.r2 > *a.r2);
      }
    }
  }
  o.require(worst < 1e-12, "midpoint linearity");
  o.require(tested > 0 && monotone_failures == 0, "strict increase of R2(rho)");
  o.detail << "max|S(0.5) - avg|=" << worst << " curves tested=" << tested
           << " non-increasing steps=" << monotone_failures;
}

void c6_tighter(Outcome& o) {
  std::mt19937_64 rng(1006);
  int tested = 0, failures = 0;
  auto check = [&](const Dataset& d, const BetaEstimate& est) {
    const VariationDecomposition dec = decompose_itt(d, est, false);
    if (!(dec.s_dd > 0.0)) return;
    ++tested;
    const VarianceBounds vb = var_tau_bounds(d, dec);
    failures += !(vb.var_upper < vb.neyman_conservative);
  };
  for (int rep = 0; rep < 200; ++rep) {
    const Dataset d = oracle::random_dataset(rng, 30 + rep, 1 + rep % 4, 0.3 + 0.002 * rep);
    check(d, estimate_beta_ri(d));
    check(d, estimate_beta_ols(d));
  }
  SimConfig c;
  c.scenario = Scenario::d;
  c.n = 500;
  for (int rep = 0; rep < 20; ++rep) {
    const Dataset d = generate_itt_dataset(c, rep).data;
    check(d, estimate_beta_ri_adjusted(d));
  }
  o.require(tested > 0 && failures == 0, "var_upper < Neyman");
  o.detail << "datasets with s_dd > 0: " << tested << ", violations: " << failures;
}

Dataset noncompliance_dataset(std::mt19937_64& rng, Eigen::Index n, Eigen::Index k) {
  const Matrix x = oracle::random_design(rng, n, k);
  const PotentialTable table = strata_table(rng, x);
  return Dataset::observe(table, x, Assignment(oracle::random_assignment(rng, n, n / 2)));
}

void c7_tsls(Outcome& o) {
  std::mt19937_64 rng(1007);
  double full = 0.0, residual = 0.0, block = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    Dataset d = oracle::random_dataset(rng, 60, 3, 0.5);
    d.d = d.t.values();
    full = std::max(full, max_abs(estimate_beta_tsls(d).beta_c - estimate_beta_ols(d).beta));
  }
  for (int rep = 0; rep < 20; ++rep) {
    const Dataset d = noncompliance_dataset(rng, 200, 3);
    const LateEstimate est = estimate_beta_tsls(d);
    const Vector gamma = *est.gamma_infinity;
    const Eigen::Index k = d.k();
    Vector eq = Vector::Zero(2 * k);
    for (Eigen::Index i = 0; i < d.n(); ++i) {
      const Vector xi = d.x.row(i).transpose();
      const double r = d.y[i] - xi.dot(gamma) - (*d.d)[i] * xi.dot(est.beta_c);
      eq.head(k) += xi * r / static_cast<double>(d.n());
      eq.tail(k) += d.t[i] * xi * r / static_cast<double>(d.n());
    }
    residual = std::max(residual, max_abs(eq));
    const Vector closed = oracle::tsls_block_inverse(d);
    block = std::max({block, max_abs(closed.tail(k) - est.beta_c), max_abs(closed.head(k) - gamma)});
  }
  o.require(full < 1e-10, "full-compliance reduction");
  o.require(residual < 1e-10, "estimating-equation residual");
  o.require(block < 1e-10, "block inverse agreement");
  o.detail << "full=" << full << " eq residual=" << residual << " block=" << block;
}

void c8_identity(Outcome& o) {
  std::mt19937_64 rng(1008);
  double worst_total = 0.0, worst_u = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const Matrix x = oracle::random_design(rng, 80 + rep, 3);
    const PotentialTable table = strata_table(rng, x);
    const ComplierDecomposition c = complier_decomposition(x, table);
    // Direct loops over the table.
    const Vector tau = table.effects();
    const double n = static_cast<double>(tau.size());
    double nc = 0, sum_c = 0;
    for (Eigen::Index i = 0; i < tau.size(); ++i) {
      if ((*table.d1)[i] == 1 && (*table.d0)[i] == 0) {
        ++nc;
        sum_c += tau[i];
      }
    }
    const double pi_c = nc / n, tau_c = sum_c / nc;
    double s_tt = 0, s_tt_c = 0;
    for (Eigen::Index i = 0; i < tau.size(); ++i) {
      s_tt += std::pow(tau[i] - tau.mean(), 2) / n;
      if ((*table.d1)[i] == 1 && (*table.d0)[i] == 0) s_tt_c += std::pow(tau[i] - tau_c, 2) / nc;
    }
    const double s_tt_u = pi_c * (1 - pi_c) * tau_c * tau_c;
    worst_total = std::max({worst_total, std::abs(s_tt - (pi_c * s_tt_c + s_tt_u)),
                            std::abs(c.s_tt - (c.pi_c * c.s_tt_c + c.s_tt_u))});
    worst_u = std::max({worst_u, std::abs(c.s_tt_u - s_tt_u), std::abs(c.s_tt - s_tt)});
  }
  o.require(worst_total < 1e-10, "total = pi_c S_tt,c + S_tt,U");
  o.require(worst_u < 1e-10, "S_tt,U = pi_c (1 - pi_c) tau_c^2");
  o.detail << "identity gap=" << worst_total << " library vs loops=" << worst_u;
}

const std::vector<EstimatorMethod> kItt{EstimatorMethod::ri, EstimatorMethod::ols,
                                        EstimatorMethod::ri_adjusted};

void c9_validity(Outcome& o) {
  const auto start = std::chrono::steady_clock::now();
  const SimResult r = study(Scenario::a, 3586, 2000, kItt);
  for (const auto& e : r.estimators) {
    o.require(e.rate >= 0.03 && e.rate <= 0.07, std::string(to_string(e.method)) + " rate");
    o.detail << to_string(e.method) << "=" << e.rate << " ";
  }
  o.detail << "time=" << seconds_since(start) << "s";
}

void c10_power(Outcome& o) {
  for (Scenario s : {Scenario::b, Scenario::d}) {
    double previous_rate = -1.0, previous_se = 0.0;
    o.detail << "scenario " << to_string(s) << " OLS/RI:";
    for (Eigen::Index n : {500, 1000, 2000, 3586}) {
      const SimResult r = study(s, n, 1000, {EstimatorMethod::ri, EstimatorMethod::ols});
      const auto& ri = find(r, EstimatorMethod::ri);
      const auto& ols = find(r, EstimatorMethod::ols);
      const double se = std::max(ri.mc_se, ols.mc_se);
      o.require(ols.rate >= ri.rate - 2.0 * se, "OLS >= RI at n=" + std::to_string(n));
      if (previous_rate >= 0.0) {
        o.require(ols.rate >= previous_rate - 2.0 * std::max(ols.mc_se, previous_se),
                  "OLS power monotone at n=" + std::to_string(n));
      }
      previous_rate = ols.rate;
      previous_se = ols.mc_se;
      o.detail << " n=" << n << ":" << ols.rate << "/" << ri.rate;
    }
    o.detail << "; ";
  }
  // RI monotonicity as well.
  for (Scenario s : {Scenario::b, Scenario::d}) {
    double prev = -1.0, prev_se = 0.0;
    for (Eigen::Index n : {500, 1000, 2000, 3586}) {
      const auto& ri = find(study(s, n, 1000, {EstimatorMethod::ri}), EstimatorMethod::ri);
      if (prev >= 0.0) o.require(ri.rate >= prev - 2.0 * std::max(ri.mc_se, prev_se), "RI monotone");
      prev = ri.rate;
      prev_se = ri.mc_se;
    }
  }
}

void c11_small_sample(Outcome& o) {
  const auto& ols = find(study(Scenario::a, 200, 2000, {EstimatorMethod::ols}), EstimatorMethod::ols);
  o.require(ols.rate >= 0.06 && ols.rate <= 0.12, "OLS rate at n=200");
  o.detail << "OLS rate=" << ols.rate << " (mc_se " << ols.mc_se << ")";
}

void c12_late(Outcome& o) {
  SimConfig c;
  c.scenario = Scenario::d;
  c.n = 100000;
  c.noncompliance = true;
  const SimDraw draw = generate_late_dataset(c, 0);
  const ComplierDecomposition cd = complier_decomposition(draw.x, draw.table);
  o.require(std::abs(cd.pi_c - 0.68) <= 0.02, "complier share");
  o.require(std::abs(cd.tau_c - 0.30) <= 0.03, "CACE");
  o.require(std::abs(cd.tau - 0.21) <= 0.03, "ITT effect");
  o.detail << "pi_c=" << cd.pi_c << " CACE=" << cd.tau_c << " ITT=" << cd.tau << "; power LATE/ITT:";

  const std::pair<EstimatorMethod, EstimatorMethod> pairs[] = {
      {EstimatorMethod::ri_complier, EstimatorMethod::ri}, {EstimatorMethod::tsls, EstimatorMethod::ols}};
  for (Scenario s : {Scenario::b, Scenario::d}) {
    for (Eigen::Index n : {1000, 2000}) {
      const SimResult late = study(s, n, 1000, {EstimatorMethod::ri_complier, EstimatorMethod::tsls}, true);
      const SimResult itt = study(s, n, 1000, {EstimatorMethod::ri, EstimatorMethod::ols});
      for (const auto& [lm, im] : pairs) {
        const auto& l = find(late, lm);
        const auto& i = find(itt, im);
        o.require(l.rate <= i.rate + 2.0 * std::max(l.mc_se, i.mc_se),
                  std::string(to_string(lm)) + " vs " + std::string(to_string(im)));
        o.detail << " " << to_string(s) << n << " " << to_string(lm) << "=" << l.rate << "/"
                 << i.rate;
      }
    }
  }
}

void c13_fisher(Outcome& o) {
  SimConfig c;
  c.scenario = Scenario::a;
  c.n = 100;
  Vector truth = Vector::Zero(4);
  truth[0] = 0.3;
  long long rejections = 0, covered = 0;
  const long long outer = 1000;
  for (long long rep = 0; rep < outer; ++rep) {
    const Dataset d = generate_itt_dataset(c, rep).data;
    RandomizationOptions opt;
    opt.draws = 999;
    opt.seed = 7000 + static_cast<std::uint64_t>(rep);
    opt.mode = RandomizationMode::monte_carlo;
    rejections += fisher_randomization_test(d, truth, opt).reject;

    opt.statistic = RandomizationStatistic::ks;
    std::vector<Vector> candidates;
    for (double shift : {-0.6, -0.3, 0.0, 0.3, 0.6}) {
      Vector v = truth;
      v[1] += shift;
      candidates.push_back(v);
    }
    covered += fisher_confidence_region(d, candidates, opt).accepted[2];
  }
  const double size = static_cast<double>(rejections) / outer;
  const double coverage = static_cast<double>(covered) / outer;
  o.require(size >= 0.03 && size <= 0.07, "sharp-null size");
  o.require(coverage >= 0.93, "constant-effect coverage");
  o.detail << "size=" << size << " coverage=" << coverage;
}

void c14_variance_ratio(Outcome& o) {
  SimConfig c;
  c.scenario = Scenario::a;
  c.n = 1000;
  const long long reps = 2000;
  long long rejections = 0;
  for (long long rep = 0; rep < reps; ++rep) {
    const Dataset d = generate_itt_dataset(c, rep).data;
    rejections += variance_ratio_test(d, estimate_beta_ri(d), 0.05).reject;
  }
  const double rate = static_cast<double>(rejections) / reps;
  const double se = std::sqrt(0.05 * 0.95 / reps);
  o.require(rate <= 0.05 + 2.0 * se, "variance-ratio size");
  o.detail << "rate=" << rate << " bound=" << 0.05 + 2.0 * se;
}

void c15_r2(Outcome& o) {
  SimConfig c;
  c.scenario = Scenario::d;
  c.n = 3586;
  double sum = 0.0;
  const int reps = 200;
  for (int rep = 0; rep < reps; ++rep) {
    const SimDraw draw = generate_itt_dataset(c, rep);
    const double s_ee = population_decomposition(draw.x, draw.table).s_ee;
    const double s_dd = decompose_itt(draw.data, estimate_beta_ols(draw.data), false).s_dd;
    sum += s_dd / (s_dd + s_ee);
  }
  const double mean = sum / reps;
  o.require(mean >= 0.4 && mean <= 0.6, "mean R2 at true S_ee");
  o.detail << "mean R2=" << mean;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, Criterion>> criteria = {
      {"exhaustive unbiasedness", c1_exhaustive},
      {"Neyman reduction", c2_neyman},
      {"OLS normal equations", c3_ols},
      {"Frechet bound pairing", c4_frechet},
      {"sensitivity linearity", c5_sensitivity},
      {"tighter variance bound", c6_tighter},
      {"TSLS reductions", c7_tsls},
      {"noncompliance variance identity", c8_identity},
      {"simulation validity", c9_validity},
      {"simulation power ordering", c10_power},
      {"small-sample OLS rejection", c11_small_sample},
      {"LATE calibration and power", c12_late},
      {"Fisher size and coverage", c13_fisher},
      {"variance-ratio size", c14_variance_ratio},
      {"scenario d R2", c15_r2},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "threw: " << e.what();
    }
    failed += !o.pass;
    std::printf("%s %2zu %s (%.1fs): %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                seconds_since(start), o.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
