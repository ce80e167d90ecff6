#include "hetfx/population.hpp"

#include "hetfx/linalg.hpp"

namespace hetfx {

PopulationDecomposition population_decomposition(const Matrix& x, const PotentialTable& table) {
  table.validate();
  const Eigen::Index n = table.size();
  if (x.rows() != n) throw Error(ErrorCode::invalid_input, "covariates and table differ in length");
  const double nd = static_cast<double>(n);
  const Matrix sxx = x.transpose() * x / nd;
  const SymmetricSolver solver(sxx, "S_xx");

  PopulationDecomposition out;
  out.gamma1 = solver.solve(Vector(x.transpose() * table.y1 / nd));
  out.gamma0 = solver.solve(Vector(x.transpose() * table.y0 / nd));
  out.beta = out.gamma1 - out.gamma0;

  const Vector tau = table.effects();
  const Vector delta = x * out.beta;
  out.tau = tau.mean();
  out.epsilon = tau - delta;
  out.s_tt = (tau.array() - out.tau).square().sum() / nd;
  out.s_dd = (delta.array() - out.tau).square().sum() / nd;
  out.s_ee = out.epsilon.squaredNorm() / nd;
  return out;
}

ComplierDecomposition complier_decomposition(const Matrix& x, const PotentialTable& table) {
  table.validate();
  if (!table.has_receipt()) throw Error(ErrorCode::missing_receipt, "table has no receipt");
  const Eigen::Index n = table.size();
  const auto strata = table.strata();
  Eigen::Index nc = 0, na = 0, nn = 0;
  for (auto s : strata) {
    nc += s == Stratum::complier;
    na += s == Stratum::always_taker;
    nn += s == Stratum::never_taker;
  }
  if (nc == 0) throw Error(ErrorCode::weak_instrument, "table has no compliers");

  const Eigen::Index k = x.cols();
  Matrix sxx_c = Matrix::Zero(k, k);
  Vector sx1_c = Vector::Zero(k);
  Vector sx0_c = Vector::Zero(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (strata[static_cast<std::size_t>(i)] != Stratum::complier) continue;
    const Vector xi = x.row(i).transpose();
    sxx_c += xi * xi.transpose();
    sx1_c += table.y1[i] * xi;
    sx0_c += table.y0[i] * xi;
  }
  const double ncd = static_cast<double>(nc);
  sxx_c /= ncd;
  sx1_c /= ncd;
  sx0_c /= ncd;

  ComplierDecomposition out;
  const double nd = static_cast<double>(n);
  out.pi_c = ncd / nd;
  out.pi_a = static_cast<double>(na) / nd;
  out.pi_n = static_cast<double>(nn) / nd;
  out.sxx_c = sxx_c;
  const SymmetricSolver solver(sxx_c, "S_xx,c");
  out.gamma1c = solver.solve(sx1_c);
  out.gamma0c = solver.solve(sx0_c);
  out.beta_c = out.gamma1c - out.gamma0c;

  const Vector tau = table.effects();
  out.tau = tau.mean();
  out.s_tt = (tau.array() - out.tau).square().sum() / nd;
  double tau_a = 0.0, tau_n = 0.0, sum_c = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    switch (strata[static_cast<std::size_t>(i)]) {
      case Stratum::complier: sum_c += tau[i]; break;
      case Stratum::always_taker: tau_a += tau[i]; break;
      case Stratum::never_taker: tau_n += tau[i]; break;
      case Stratum::defier: break;
    }
  }
  out.tau_c = sum_c / ncd;
  if (na > 0) tau_a /= static_cast<double>(na);
  if (nn > 0) tau_n /= static_cast<double>(nn);

  for (Eigen::Index i = 0; i < n; ++i) {
    if (strata[static_cast<std::size_t>(i)] != Stratum::complier) continue;
    const double delta = x.row(i).dot(out.beta_c);
    const double eps = tau[i] - delta;
    out.s_tt_c += (tau[i] - out.tau_c) * (tau[i] - out.tau_c);
    out.s_dd_c += (delta - out.tau_c) * (delta - out.tau_c);
    out.s_ee_c += eps * eps;
  }
  out.s_tt_c /= ncd;
  out.s_dd_c /= ncd;
  out.s_ee_c /= ncd;
  out.s_tt_u = out.pi_c * (out.tau_c - out.tau) * (out.tau_c - out.tau) +
               out.pi_a * (tau_a - out.tau) * (tau_a - out.tau) +
               out.pi_n * (tau_n - out.tau) * (tau_n - out.tau);
  return out;
}

}  // namespace hetfx
