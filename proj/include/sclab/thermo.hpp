#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace sclab::thermo {

// Monte-Carlo thermodynamics of softmax over i.i.d. standard-normal class
// energies: <ln Z>, free energy F, internal energy U, entropy S, the
// aligned-student loss L(beta; beta_star) and its gradient. Estimates are
// grouped into independent energy sets; standard errors come from the
// set-to-set spread. Everything uses max-subtracted log-sum-exp so that
// beta up to 1e3 is safe.

struct ThermoConfig {
  int num_energy_sets = 10;
  int batch_per_set = 1024;
  std::uint64_t seed = 0;
};

struct ThermoPoint {
  double lnZ = 0.0, F = 0.0, U = 0.0, S = 0.0;
  double se_lnZ = 0.0, se_F = 0.0, se_U = 0.0, se_S = 0.0;
};

struct AnsatzPoint {
  double L = 0.0, dLdBeta = 0.0;
  double se_L = 0.0, se_dLdBeta = 0.0;
};

struct C0Estimate {
  double c0_emp = 0.0;
  double se = 0.0;
  double c0_asym = 0.0;  // sqrt(2 ln n)
};

struct ThermoCurve {
  double beta_star = 0.0;
  int n = 0;
  Eigen::VectorXd beta_grid;
  Eigen::VectorXd lnZ, F, U, S, L, dLdBeta;
  Eigen::VectorXd se_lnZ, se_F, se_U, se_S, se_L, se_dLdBeta;
};

struct ExpansionCoeffs {
  double c0 = 0.0, c1 = 0.0, c2 = 0.0;
  double se_c0 = 0.0, se_c2 = 0.0;
  double window_lo = 0.0, window_hi = 0.0;
  double residual = 0.0;  // RMS of the U-fit residual
};

// F is reported as NaN at beta = 0 (undefined there); lnZ, U, S are exact
// or estimated as usual.
ThermoPoint estimate_thermo(double beta, int n, const ThermoConfig& cfg);

// L = U(b*)(b - b*) + b* F(b*) - b F(b) and dL/dbeta = U(b*) - U(b),
// evaluated with paired sampling (identical energy sets at beta and
// beta_star). At beta == beta_star both are exactly zero.
AnsatzPoint ansatz_loss_and_grad(double beta, double beta_star, int n,
                                 const ThermoConfig& cfg);

// c0_emp = -<min_i eps_i> over num_energy_sets * batch_per_set draws.
C0Estimate estimate_c0(int n, const ThermoConfig& cfg);

// Full curve over a linear beta grid in [0, beta_star] (default 100 points)
// with common random numbers across the whole grid.
ThermoCurve compute_curve(double beta_star, int n, const ThermoConfig& cfg,
                          int grid_points = 100);

// Same machinery on an explicit grid (still paired against beta_star).
ThermoCurve compute_curve_on_grid(const Eigen::Ref<const Eigen::VectorXd>& beta_grid,
                                  double beta_star, int n, const ThermoConfig& cfg);

// Least-squares fit of U(beta) ~ -c0 + c2 / beta^2 over grid points with
// beta in [window_lo, window_hi]; c1 is reported from the corresponding
// three-term F fit. The window must hold at least 4 points, all above
// twice the curve's own c0 proxy (-min U).
ExpansionCoeffs fit_expansion_coeffs(const ThermoCurve& curve, double window_lo,
                                     double window_hi);

}  // namespace sclab::thermo
