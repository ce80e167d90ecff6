#include "doctest.h"
#include "oracles.hpp"

#include "hetfx/linalg.hpp"

using namespace hetfx;

TEST_CASE("symmetric solver solves and inverts") {
  std::mt19937_64 rng(1);
  const Matrix x = oracle::random_design(rng, 40, 4);
  const Matrix a = x.transpose() * x / 40.0;
  const SymmetricSolver s(a, "A");
  const Vector b = Vector::LinSpaced(4, 1.0, 4.0);
  CHECK((a * s.solve(b) - b).cwiseAbs().maxCoeff() < 1e-12);
  const Matrix inv = s.inverse();
  CHECK(inv == inv.transpose());
  CHECK((a * inv - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(s.pivot_ratio() > 1e-3);
}

TEST_CASE("symmetric solver handles indefinite matrices") {
  Matrix a(2, 2);
  a << 1, 2, 2, 1;
  const SymmetricSolver s(a, "A");
  Vector b(2);
  b << 3, 3;
  CHECK((a * s.solve(b) - b).norm() < 1e-14);
}

TEST_CASE("rank deficiency names the collapsed column") {
  std::mt19937_64 rng(2);
  Matrix x = oracle::random_design(rng, 30, 4);
  x.col(3) = 2.0 * x.col(1);
  const Matrix a = x.transpose() * x;
  try {
    SymmetricSolver s(a, "S_xx", {"intercept", "age", "income", "age2"});
    FAIL("expected rank deficiency");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::rank_deficient);
    const std::string msg = e.what();
    CHECK(msg.find("S_xx") != std::string::npos);
    const bool names_one = msg.find("age") != std::string::npos;
    CHECK(names_one);
  }
}

TEST_CASE("failure code is configurable") {
  try {
    SymmetricSolver s(Matrix::Zero(2, 2), "S", {}, ErrorCode::weak_instrument);
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::weak_instrument);
  }
}

TEST_CASE("general solver solves nonsymmetric systems and rejects singular ones") {
  Matrix a(3, 3);
  a << 2, 1, 0, 0, 3, 1, 1, 0, 4;
  const GeneralSolver s(a, "A");
  const Vector b = Vector::Ones(3);
  CHECK((a * s.solve(b) - b).norm() < 1e-14);
  Matrix singular = a;
  singular.row(2) = singular.row(0) + singular.row(1);
  CHECK_THROWS_AS(GeneralSolver(singular, "B"), Error);
}

TEST_CASE("sandwich is symmetric") {
  std::mt19937_64 rng(9);
  const Matrix x = oracle::random_design(rng, 10, 3);
  const Matrix bread = x.transpose() * x;
  const Matrix meat = oracle::covariance(x.rightCols(3));
  const Matrix s = sandwich(bread, meat);
  CHECK(s == s.transpose());
  CHECK((s - bread * meat * bread).cwiseAbs().maxCoeff() < 1e-10);
}
