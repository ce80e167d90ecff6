#include "doctest.h"
#include "oracles.hpp"

#include "hetfx/decomp.hpp"
#include "hetfx/specfun.hpp"

using namespace hetfx;

namespace {

Vector arm_centered(const Vector& r, const Assignment& t, int arm) {
  std::vector<double> v;
  for (Eigen::Index i = 0; i < r.size(); ++i)
    if (t[i] == arm) v.push_back(r[i]);
  Vector out = Eigen::Map<Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
  return out.array() - out.mean();
}

}  // namespace

TEST_CASE("rho grid parsing") {
  const auto g = make_rho_grid(0.0, 1.0, 0.01);
  CHECK(g.size() == 101);
  CHECK(g.front() == 0.0);
  CHECK(g.back() == 1.0);
  CHECK(default_rho_grid().size() == 11);
  CHECK_THROWS_AS(make_rho_grid(0.0, 1.0, 0.0), Error);
  CHECK_THROWS_AS(make_rho_grid(1.0, 0.0, 0.1), Error);
}

TEST_CASE("decomposition pieces agree with direct computation") {
  std::mt19937_64 rng(41);
  const Dataset d = oracle::random_dataset(rng, 40, 3, 0.4);
  const BetaEstimate est = estimate_beta_ols(d);
  const VariationDecomposition dec = decompose_itt(d, est, false);

  const Vector delta = d.x * est.beta;
  CHECK(dec.s_dd == doctest::Approx((delta.array() - delta.mean()).square().mean()));
  const Vector e1 = arm_centered(est.residuals, d.t, 1);
  const Vector e0 = arm_centered(est.residuals, d.t, 0);
  CHECK(dec.v1 == doctest::Approx(e1.squaredNorm() / e1.size()));
  CHECK(dec.v0 == doctest::Approx(e0.squaredNorm() / e0.size()));
  CHECK(dec.see_lower == doctest::Approx(oracle::quantile_integral_grid(e1, e0, false, 16 * 24 * 10)));
  CHECK(dec.see_upper_frechet ==
        doctest::Approx(oracle::quantile_integral_grid(e1, e0, true, 16 * 24 * 10)));
  CHECK(dec.see_lower <= dec.see_upper_indep);
  CHECK(dec.see_upper_indep <= dec.see_upper_frechet);
  REQUIRE(dec.r2.lower);
  REQUIRE(dec.r2.upper);
  CHECK(*dec.r2.lower == doctest::Approx(dec.s_dd / (dec.s_dd + dec.see_upper_frechet)));
  CHECK(*dec.r2.upper == doctest::Approx(dec.s_dd / (dec.s_dd + dec.see_lower)));
  CHECK(dec.r2_status == R2Status::ok);
  CHECK(dec.rho_curve.size() == 11);
}

TEST_CASE("nonnegative correlation switches the upper bound to V1 + V0") {
  std::mt19937_64 rng(42);
  const Dataset d = oracle::random_dataset(rng, 40, 2);
  const BetaEstimate est = estimate_beta_ri(d);
  const VariationDecomposition dec = decompose_itt(d, est, true);
  CHECK(dec.see_upper() == dec.v1 + dec.v0);
  CHECK(*dec.r2.lower == doctest::Approx(dec.s_dd / (dec.s_dd + dec.v1 + dec.v0)));
}

TEST_CASE("sensitivity curve is linear in rho and rejects rho outside [0, 1]") {
  std::mt19937_64 rng(43);
  const Dataset d = oracle::random_dataset(rng, 50, 3);
  const VariationDecomposition dec = decompose_itt(d, estimate_beta_ols(d), false);
  const auto curve = sensitivity_curve(dec, {0.0, 0.5, 1.0});
  CHECK(curve[0].see == doctest::Approx(dec.v1 + dec.v0));
  CHECK(curve[2].see == doctest::Approx(dec.see_lower));
  CHECK(std::abs(curve[1].see - 0.5 * (curve[0].see + curve[2].see)) < 1e-12);
  CHECK_THROWS_AS(sensitivity_curve(dec, {1.5}), Error);
  CHECK_THROWS_AS(sensitivity_curve(dec, {-0.1}), Error);
}

TEST_CASE("identical arm residual distributions give lower bound zero and R2 upper one") {
  // Treated outcomes are control outcomes shifted by a linear effect.
  Matrix cov(8, 1);
  cov << 1, 2, 3, 4, 1, 2, 3, 4;
  Vector y(8);
  IndexVector t(8);
  for (int i = 0; i < 8; ++i) {
    t[i] = i < 4;
    y[i] = (i % 4) * 0.5 + (t[i] ? 1.0 + 0.2 * cov(i, 0) : 0.0);
  }
  const Dataset d = Dataset::with_intercept(cov, t, y);
  const VariationDecomposition dec = decompose_itt(d, estimate_beta_ols(d), false);
  CHECK(dec.see_lower < 1e-20);
  REQUIRE(dec.r2.upper);
  CHECK(*dec.r2.upper == doctest::Approx(1.0));
}

TEST_CASE("zero systematic and zero idiosyncratic variation reports undefined R2") {
  Matrix cov(8, 1);
  cov << 1, 2, 3, 4, 1, 2, 3, 4;
  Vector y(8);
  IndexVector t(8);
  for (int i = 0; i < 8; ++i) {
    t[i] = i < 4;
    y[i] = 2.0 + (t[i] ? 0.7 : 0.0);  // constant effect, no noise
  }
  const Dataset d = Dataset::with_intercept(cov, t, y);
  const VariationDecomposition dec = decompose_itt(d, estimate_beta_ols(d), false);
  CHECK(dec.r2_status == R2Status::undefined);
  CHECK_FALSE(dec.r2.lower);
  CHECK_FALSE(dec.r2.upper);
  CHECK(to_string(dec.r2_status) == "undefined");
}

TEST_CASE("variance bounds sit below the Neyman conservative estimate") {
  std::mt19937_64 rng(44);
  const Dataset d = oracle::random_dataset(rng, 60, 3);
  const VariationDecomposition dec = decompose_itt(d, estimate_beta_ols(d), false);
  const VarianceBounds vb = var_tau_bounds(d, dec);
  CHECK(vb.var_lower <= vb.var_upper);
  CHECK(vb.var_upper < vb.neyman_conservative);
  CHECK(vb.var_upper ==
        doctest::Approx(vb.neyman_conservative - (dec.s_dd + dec.see_lower) / 60.0));
}

TEST_CASE("variance ratio test statistic by hand") {
  std::mt19937_64 rng(45);
  const Dataset d = oracle::random_dataset(rng, 40, 2);
  const BetaEstimate est = estimate_beta_ols(d);
  const TestResult r = variance_ratio_test(d, est, 0.05);

  std::vector<double> a, b;
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    if (d.t.treated(i)) {
      a.push_back(d.y[i] - d.x.row(i).dot(est.beta));
    } else {
      b.push_back(d.y[i]);
    }
  }
  auto moments = [](const std::vector<double>& v) {
    double m = 0, m2 = 0, m4 = 0;
    for (double x : v) m += x / v.size();
    for (double x : v) {
      m2 += std::pow(x - m, 2) / v.size();
      m4 += std::pow(x - m, 4) / v.size();
    }
    return std::array<double, 2>{m2 * v.size() / (v.size() - 1.0), m4 / (m2 * m2)};
  };
  const auto ma = moments(a), mb = moments(b);
  const double stat = (std::log(ma[0]) - std::log(mb[0])) /
                      std::sqrt((ma[1] - 1) / a.size() + (mb[1] - 1) / b.size());
  CHECK(r.statistic == doctest::Approx(stat).epsilon(1e-12));
  CHECK(r.p_value == doctest::Approx(normal_cdf(stat)));
  CHECK(r.reject == (stat < normal_quantile(0.05)));
}

TEST_CASE("variance ratio test rejects a clearly smaller treated variance") {
  std::mt19937_64 rng(46);
  std::normal_distribution<double> z;
  const int n = 400;
  Matrix cov(n, 1);
  Vector y(n);
  IndexVector t(n);
  for (int i = 0; i < n; ++i) {
    cov(i, 0) = z(rng);
    t[i] = i % 2;
    y[i] = t[i] ? 0.3 * z(rng) : 2.0 * z(rng);
  }
  const Dataset d = Dataset::with_intercept(cov, t, y);
  CHECK(variance_ratio_test(d, estimate_beta_ols(d), 0.05).reject);
}

TEST_CASE("variance ratio test input checks") {
  std::mt19937_64 rng(47);
  const Dataset d = oracle::random_dataset(rng, 30, 2);
  const BetaEstimate est = estimate_beta_ols(d);
  CHECK_THROWS_AS(variance_ratio_test(d, est, 0.0), Error);
  Dataset flat = d;
  flat.y.setConstant(1.0);
  try {
    variance_ratio_test(flat, est, 0.05);
    FAIL("expected degenerate sample");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::degenerate_sample);
  }
}
