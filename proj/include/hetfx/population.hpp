#pragma once

// Finite-population quantities computed from complete potential outcomes.
// These are estimands, not estimators: they need both Y(1) and Y(0).

#include "hetfx/types.hpp"

namespace hetfx {

struct PopulationDecomposition {
  Vector gamma1;
  Vector gamma0;
  Vector beta;
  double tau = 0.0;   // average effect
  double s_tt = 0.0;  // variance of effects, divisor n
  double s_dd = 0.0;  // variance of the systematic part X'beta, divisor n
  double s_ee = 0.0;  // mean squared idiosyncratic residual
  Vector epsilon;     // idiosyncratic residual per unit
};

/// Least-squares projection of the unit effects on `x` (intercept first).
PopulationDecomposition population_decomposition(const Matrix& x, const PotentialTable& table);

struct ComplierDecomposition {
  double pi_c = 0.0;
  double pi_a = 0.0;
  double pi_n = 0.0;
  Vector gamma1c;
  Vector gamma0c;
  Vector beta_c;
  double tau = 0.0;     // overall average effect
  double tau_c = 0.0;   // complier average effect
  double s_tt = 0.0;    // all units, divisor n
  double s_tt_c = 0.0;  // compliers, divisor n_c
  double s_dd_c = 0.0;
  double s_ee_c = 0.0;
  double s_tt_u = 0.0;  // sum_u pi_u (tau_u - tau)^2
  Matrix sxx_c;         // complier second-moment matrix of x
};

/// Complier-stratum decomposition; requires receipt outcomes and no defiers.
ComplierDecomposition complier_decomposition(const Matrix& x, const PotentialTable& table);

}  // namespace hetfx
