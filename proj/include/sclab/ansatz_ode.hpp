#pragma once

#include <Eigen/Dense>
#include <variant>
#include <vector>

#include "sclab/thermo.hpp"

namespace sclab::ode {

// Fritsch-Carlson monotone piecewise-cubic interpolant. No overshoot
// between nodes; evaluation outside the node range throws.
class MonotoneCubic {
 public:
  MonotoneCubic() = default;
  MonotoneCubic(const Eigen::Ref<const Eigen::VectorXd>& x,
                const Eigen::Ref<const Eigen::VectorXd>& y);

  double operator()(double xq) const;
  double x_min() const { return x_.size() ? x_[0] : 0.0; }
  double x_max() const { return x_.size() ? x_[x_.size() - 1] : 0.0; }

 private:
  Eigen::VectorXd x_, y_, d_;
};

// U(beta) = -c0 + c2 / beta^2; valid only for beta > 2*c0 (and beta > 0).
// The associated intermediate-regime loss is c2 / beta.
struct SeriesLowTempU {
  double c0 = 0.0;
  double c2 = 1.0;
};

// U(beta) = -beta; loss 0.5 * (beta_star - beta)^2.
struct LinearHighTempU {};

// U and L interpolated from a Monte-Carlo ThermoCurve; extrapolation
// beyond the curve's beta grid is forbidden.
struct TabulatedU {
  explicit TabulatedU(const thermo::ThermoCurve& curve);
  MonotoneCubic u;
  MonotoneCubic loss;
  double c0 = 0.0;  // -min U over the grid, the regime marker
};

using UModel = std::variant<SeriesLowTempU, LinearHighTempU, TabulatedU>;

double u_value(const UModel& model, double beta);
double model_loss(const UModel& model, double beta, double beta_star);
// Smallest beta at which the model may be evaluated.
double validity_floor(const UModel& model);
// Regime marker c0 carried into OdeRun for window selection.
double model_c0(const UModel& model);

struct OdeRun {
  double beta0 = 0.0;
  double beta_star = 0.0;
  double c_eff = 1.0;
  int n = 1;
  double step = 0.0;
  double c0 = 0.0;
  Eigen::VectorXd tau;
  Eigen::VectorXd beta;
  Eigen::VectorXd loss;  // model loss evaluated along the trajectory
};

// Fixed-step RK4 for d beta / d tau = (c_eff / n) * (U(beta) - U(beta_star)).
// step <= 0 selects the default tau_max / 1e6. Records ~record_points states
// on a geometric step grid (always including tau = 0 and the final state);
// halts early once beta is within 1e-9 (relative to max(1, beta_star)) of
// beta_star.
OdeRun integrate_beta(const UModel& model, double beta0, double beta_star,
                      double c_eff, int n, double tau_max, double step = 0.0,
                      int record_points = 512);

struct HighTempState {
  double beta = 0.0;
  double loss = 0.0;
};

// beta(tau) = beta_star - (beta_star - beta0) exp(-c_eff tau / n) and
// loss = 0.5 (beta_star - beta0)^2 exp(-2 c_eff tau / n).
HighTempState closed_form_high_temp(double beta0, double beta_star, double c_eff,
                                    int n, double tau);

struct ScalingPrediction {
  double beta_exponent = 0.0;
  double loss_exponent = 0.0;
  double tau_lo = 0.0, tau_hi = 0.0;  // window actually used
};

// Log-log slopes of beta(tau) and loss(tau) over the intermediate window
// beta in (2*c0, beta_star/5). Rejects runs whose window spans fewer than
// two decades of tau, reporting the achieved span.
ScalingPrediction predict_intermediate_scaling(const OdeRun& run);

}  // namespace sclab::ode
