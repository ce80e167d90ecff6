#include "doctest.h"
#include "oracles.hpp"

#include "hetfx/specfun.hpp"

using namespace hetfx;

TEST_CASE("chi-square CDF matches the closed forms") {
  for (int df : {1, 2, 3, 4, 5, 7, 10, 16, 31}) {
    for (double x : {0.01, 0.5, 1.0, 3.0, 7.5, 10.0, 25.0, 60.0}) {
      const ChiSquare c(df);
      CHECK(std::abs(c.cdf(x) - oracle::chi2_cdf(df, x)) < 1e-10);
      CHECK(std::abs(c.cdf(x) + c.survival(x) - 1.0) < 1e-14);
    }
  }
}

TEST_CASE("chi-square quantiles against bisection") {
  CHECK(std::abs(ChiSquare(1).quantile(0.95) - 3.8415) < 1e-3);
  CHECK(std::abs(ChiSquare(16).quantile(0.95) - 26.296) < 1e-2);
  for (int df : {1, 3, 5, 16, 40}) {
    for (double p : {0.01, 0.3, 0.5, 0.9, 0.95, 0.999}) {
      const double ref = oracle::chi2_quantile(df, p);
      CHECK(ChiSquare(df).quantile(p) == doctest::Approx(ref).epsilon(1e-8));
    }
  }
}

TEST_CASE("survival and its inverse round-trip") {
  for (int df : {1, 5, 16}) {
    const ChiSquare c(df);
    CHECK(c.survival(0.0) == 1.0);
    for (double x : {0.5, 3.0, 10.0}) {
      CHECK(c.inverse_survival(c.survival(x)) == doctest::Approx(x).epsilon(1e-8));
      CHECK(c.quantile(c.cdf(x)) == doctest::Approx(x).epsilon(1e-8));
    }
  }
}

TEST_CASE("far tail survival keeps relative accuracy") {
  const ChiSquare c(3);
  const double s = c.survival(200.0);
  CHECK(s > 0.0);
  CHECK(s < 1e-40);
  CHECK(c.inverse_survival(s) == doctest::Approx(200.0).epsilon(1e-8));
}

TEST_CASE("chi-square with one df is a squared normal") {
  for (double z : {0.3, 1.0, 1.96, 2.5}) {
    CHECK(ChiSquare(1).survival(z * z) == doctest::Approx(2.0 * normal_cdf(-z)).epsilon(1e-12));
  }
}

TEST_CASE("chi-square domain errors") {
  CHECK_THROWS_AS(ChiSquare(0), Error);
  CHECK_THROWS_AS(ChiSquare(2).quantile(0.0), Error);
  CHECK_THROWS_AS(ChiSquare(2).quantile(1.0), Error);
  CHECK_THROWS_AS(ChiSquare(2).survival(-1.0), Error);
  CHECK(ChiSquare(2).pdf(1.0) == doctest::Approx(0.5 * std::exp(-0.5)));
}

TEST_CASE("incomplete gamma values") {
  CHECK(regularized_gamma_p(1.0, 2.0) == doctest::Approx(1.0 - std::exp(-2.0)).epsilon(1e-14));
  CHECK(regularized_gamma_q(0.5, 4.0) == doctest::Approx(std::erfc(2.0)).epsilon(1e-12));
  CHECK(regularized_gamma_p(3.0, 0.0) == 0.0);
}

TEST_CASE("normal CDF and quantile") {
  CHECK(normal_cdf(0.0) == 0.5);
  CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-14));
  for (double p : {1e-12, 1e-6, 0.01, 0.05, 0.3, 0.5, 0.77, 0.975, 1 - 1e-9}) {
    CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
  }
  CHECK(normal_quantile(0.05) == doctest::Approx(-1.6448536269514722).epsilon(1e-13));
  CHECK_THROWS_AS(normal_quantile(0.0), Error);
}
