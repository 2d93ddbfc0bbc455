#include "sclab/ansatz_ode.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "sclab/scaling_fit.hpp"

namespace sclab::ode {

namespace {

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

MonotoneCubic::MonotoneCubic(const Eigen::Ref<const Eigen::VectorXd>& x,
                             const Eigen::Ref<const Eigen::VectorXd>& y)
    : x_(x), y_(y) {
  const Eigen::Index n = x_.size();
  if (n < 2 || y_.size() != n) {
    throw std::invalid_argument("MonotoneCubic: need >= 2 nodes");
  }
  for (Eigen::Index i = 1; i < n; ++i) {
    if (!(x_[i] > x_[i - 1])) {
      throw std::invalid_argument("MonotoneCubic: nodes must be strictly increasing");
    }
  }
  Eigen::VectorXd h = x_.tail(n - 1) - x_.head(n - 1);
  Eigen::VectorXd delta = (y_.tail(n - 1) - y_.head(n - 1)).cwiseQuotient(h);
  d_.resize(n);
  // Fritsch-Carlson derivative limiter.
  for (Eigen::Index i = 1; i < n - 1; ++i) {
    if (delta[i - 1] * delta[i] <= 0.0) {
      d_[i] = 0.0;
    } else {
      const double w1 = 2.0 * h[i] + h[i - 1];
      const double w2 = h[i] + 2.0 * h[i - 1];
      d_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
    }
  }
  auto endpoint = [](double h0, double h1, double d0, double d1) {
    double d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (sign(d) != sign(d0)) {
      d = 0.0;
    } else if (sign(d0) != sign(d1) && std::abs(d) > 3.0 * std::abs(d0)) {
      d = 3.0 * d0;
    }
    return d;
  };
  if (n == 2) {
    d_[0] = d_[1] = delta[0];
  } else {
    d_[0] = endpoint(h[0], h[1], delta[0], delta[1]);
    d_[n - 1] = endpoint(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
  }
}

double MonotoneCubic::operator()(double xq) const {
  const Eigen::Index n = x_.size();
  if (n == 0) throw std::logic_error("MonotoneCubic: empty");
  if (xq < x_[0] || xq > x_[n - 1]) {
    throw std::out_of_range("MonotoneCubic: query outside node range");
  }
  const double* begin = x_.data();
  Eigen::Index j = static_cast<Eigen::Index>(
      std::upper_bound(begin, begin + n, xq) - begin);
  j = std::clamp<Eigen::Index>(j, 1, n - 1);
  const double h = x_[j] - x_[j - 1];
  const double t = (xq - x_[j - 1]) / h;
  const double t2 = t * t;
  const double t3 = t2 * t;
  const double h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
  const double h10 = t3 - 2.0 * t2 + t;
  const double h01 = -2.0 * t3 + 3.0 * t2;
  const double h11 = t3 - t2;
  return h00 * y_[j - 1] + h10 * h * d_[j - 1] + h01 * y_[j] + h11 * h * d_[j];
}

TabulatedU::TabulatedU(const thermo::ThermoCurve& curve)
    : u(curve.beta_grid, curve.U),
      loss(curve.beta_grid, curve.L),
      c0(-curve.U.minCoeff()) {}

double u_value(const UModel& model, double beta) {
  return std::visit(
      [beta](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, SeriesLowTempU>) {
          if (beta <= 2.0 * m.c0 || beta <= 0.0) {
            throw std::domain_error("series U model evaluated below its validity floor");
          }
          return -m.c0 + m.c2 / (beta * beta);
        } else if constexpr (std::is_same_v<T, LinearHighTempU>) {
          return -beta;
        } else {
          return m.u(beta);
        }
      },
      model);
}

double model_loss(const UModel& model, double beta, double beta_star) {
  return std::visit(
      [beta, beta_star](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, SeriesLowTempU>) {
          return m.c2 / beta;
        } else if constexpr (std::is_same_v<T, LinearHighTempU>) {
          const double d = beta_star - beta;
          return 0.5 * d * d;
        } else {
          return m.loss(beta);
        }
      },
      model);
}

double validity_floor(const UModel& model) {
  return std::visit(
      [](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, SeriesLowTempU>) {
          return 2.0 * m.c0;
        } else if constexpr (std::is_same_v<T, LinearHighTempU>) {
          return 0.0;
        } else {
          return m.u.x_min();
        }
      },
      model);
}

double model_c0(const UModel& model) {
  return std::visit(
      [](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, SeriesLowTempU>) {
          return m.c0;
        } else if constexpr (std::is_same_v<T, LinearHighTempU>) {
          return 0.0;
        } else {
          return m.c0;
        }
      },
      model);
}

OdeRun integrate_beta(const UModel& model, double beta0, double beta_star,
                      double c_eff, int n, double tau_max, double step,
                      int record_points) {
  if (beta0 < 0.0) throw std::invalid_argument("integrate_beta: beta0 must be >= 0");
  if (!(tau_max > 0.0)) throw std::invalid_argument("integrate_beta: tau_max must be > 0");
  if (n < 1) throw std::invalid_argument("integrate_beta: n must be >= 1");
  if (step <= 0.0) step = tau_max / 1e6;
  if (std::holds_alternative<SeriesLowTempU>(model)) {
    const double floor = validity_floor(model);
    if (beta0 <= floor || beta0 <= 0.0) {
      throw std::domain_error("integrate_beta: series model requires beta0 > 2*c0 (> 0)");
    }
  }

  const long total = static_cast<long>(std::ceil(tau_max / step));
  const double scale = c_eff / static_cast<double>(n);
  const double u_star = u_value(model, beta_star);
  auto f = [&](double b) { return scale * (u_value(model, b) - u_star); };
  const double halt_tol = 1e-9 * std::max(1.0, std::abs(beta_star));
  const bool upward = beta0 <= beta_star;

  // Geometric recording grid over step indices (plus 0 and the last step).
  std::set<long> record{0, total};
  if (record_points > 1 && total > 1) {
    const double lmax = std::log(static_cast<double>(total));
    for (int k = 0; k < record_points; ++k) {
      const double frac = static_cast<double>(k) / static_cast<double>(record_points - 1);
      record.insert(static_cast<long>(std::llround(std::exp(frac * lmax))));
    }
  }

  std::vector<double> taus, betas, losses;
  taus.reserve(record.size());
  betas.reserve(record.size());
  losses.reserve(record.size());

  double b = beta0;
  auto emit = [&](long t_idx) {
    taus.push_back(static_cast<double>(t_idx) * step);
    betas.push_back(b);
    losses.push_back(model_loss(model, b, beta_star));
  };

  auto it = record.begin();
  for (long t = 0; t <= total; ++t) {
    if (it != record.end() && *it == t) {
      emit(t);
      ++it;
    }
    if (t == total) break;
    if (std::abs(beta_star - b) <= halt_tol) break;
    const double k1 = f(b);
    const double k2 = f(b + 0.5 * step * k1);
    const double k3 = f(b + 0.5 * step * k2);
    const double k4 = f(b + step * k3);
    b += (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (upward && b > beta_star) b = beta_star;
    if (!upward && b < beta_star) b = beta_star;
  }

  OdeRun run;
  run.beta0 = beta0;
  run.beta_star = beta_star;
  run.c_eff = c_eff;
  run.n = n;
  run.step = step;
  run.c0 = model_c0(model);
  run.tau = Eigen::Map<Eigen::VectorXd>(taus.data(), static_cast<Eigen::Index>(taus.size()));
  run.beta = Eigen::Map<Eigen::VectorXd>(betas.data(), static_cast<Eigen::Index>(betas.size()));
  run.loss =
      Eigen::Map<Eigen::VectorXd>(losses.data(), static_cast<Eigen::Index>(losses.size()));
  return run;
}

HighTempState closed_form_high_temp(double beta0, double beta_star, double c_eff,
                                    int n, double tau) {
  const double decay = std::exp(-c_eff * tau / static_cast<double>(n));
  HighTempState s;
  s.beta = beta_star - (beta_star - beta0) * decay;
  const double d0 = beta_star - beta0;
  s.loss = 0.5 * d0 * d0 * decay * decay;
  return s;
}

ScalingPrediction predict_intermediate_scaling(const OdeRun& run) {
  const double lo = 2.0 * run.c0;
  const double hi = run.beta_star / 5.0;
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < run.tau.size(); ++i) {
    if (run.tau[i] > 0.0 && run.beta[i] > lo && run.beta[i] < hi) {
      idx.push_back(i);
    }
  }
  double decades = 0.0;
  if (idx.size() >= 2) {
    decades = std::log10(run.tau[idx.back()] / run.tau[idx.front()]);
  }
  if (idx.size() < 4 || decades < 2.0) {
    throw std::runtime_error(
        "predict_intermediate_scaling: window covers " + std::to_string(decades) +
        " decades of tau (need >= 2) with " + std::to_string(idx.size()) + " points");
  }
  const Eigen::Index m = static_cast<Eigen::Index>(idx.size());
  Eigen::VectorXd t(m), bb(m), ll(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    t[i] = run.tau[idx[static_cast<std::size_t>(i)]];
    bb[i] = run.beta[idx[static_cast<std::size_t>(i)]];
    ll[i] = run.loss[idx[static_cast<std::size_t>(i)]];
  }
  ScalingPrediction pred;
  pred.beta_exponent = fit::loglog_slope(t, bb, {0, static_cast<std::size_t>(m)}).slope;
  pred.loss_exponent = fit::loglog_slope(t, ll, {0, static_cast<std::size_t>(m)}).slope;
  pred.tau_lo = t[0];
  pred.tau_hi = t[m - 1];
  return pred;
}

}  // namespace sclab::ode
