#include "sclab/scaling_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "sclab/rng.hpp"

namespace sclab::fit {

namespace {

struct LinFit {
  double slope, intercept, rms, stderr_slope;
};

// OLS of y on x with log-space RMS residual.
LinFit linear_fit(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  const double n = static_cast<double>(x.size());
  const double mx = x.mean();
  const double my = y.mean();
  Eigen::ArrayXd dx = x.array() - mx;
  Eigen::ArrayXd dy = y.array() - my;
  const double sxx = dx.square().sum();
  const double slope = (dx * dy).sum() / sxx;
  const double intercept = my - slope * mx;
  Eigen::ArrayXd resid = dy - slope * dx;
  const double ssr = resid.square().sum();
  const double rms = std::sqrt(ssr / n);
  const double var = x.size() > 2 ? ssr / (n - 2.0) : 0.0;
  return {slope, intercept, rms, std::sqrt(var / sxx)};
}

void check_window_positive(const Eigen::Ref<const Eigen::VectorXd>& xs,
                           const Eigen::Ref<const Eigen::VectorXd>& ys,
                           IndexWindow w) {
  if (w.hi > static_cast<std::size_t>(xs.size()) || w.lo >= w.hi) {
    throw std::invalid_argument("loglog_slope: window out of range");
  }
  for (std::size_t i = w.lo; i < w.hi; ++i) {
    if (!(xs[static_cast<Eigen::Index>(i)] > 0.0) ||
        !(ys[static_cast<Eigen::Index>(i)] > 0.0)) {
      throw std::invalid_argument("loglog_slope: nonpositive value in window at row " +
                                  std::to_string(i));
    }
  }
}

double profile_residual(const Eigen::VectorXd& ltau, const Eigen::VectorXd& losses,
                        double offset) {
  Eigen::VectorXd lres = (losses.array() - offset).log().matrix();
  return linear_fit(ltau, lres).rms;
}

}  // namespace

SlopeFit loglog_slope(const Eigen::Ref<const Eigen::VectorXd>& xs,
                      const Eigen::Ref<const Eigen::VectorXd>& ys,
                      IndexWindow window) {
  if (xs.size() != ys.size()) {
    throw std::invalid_argument("loglog_slope: size mismatch");
  }
  if (window.size() < 4) {
    throw std::invalid_argument("loglog_slope: need at least 4 points");
  }
  check_window_positive(xs, ys, window);
  const Eigen::Index lo = static_cast<Eigen::Index>(window.lo);
  const Eigen::Index len = static_cast<Eigen::Index>(window.size());
  Eigen::VectorXd lx = xs.segment(lo, len).array().log().matrix();
  Eigen::VectorXd ly = ys.segment(lo, len).array().log().matrix();
  LinFit f = linear_fit(lx, ly);
  return {f.slope, f.intercept, f.stderr_slope};
}

IndexWindow auto_window(const Eigen::Ref<const Eigen::VectorXd>& xs,
                        const Eigen::Ref<const Eigen::VectorXd>& ys,
                        double max_spread, std::size_t min_points) {
  const std::size_t n = static_cast<std::size_t>(xs.size());
  if (n < min_points || min_points < 5) {
    throw std::invalid_argument("auto_window: too few points");
  }
  check_window_positive(xs, ys, {0, n});
  Eigen::VectorXd lx = xs.array().log().matrix();
  Eigen::VectorXd ly = ys.array().log().matrix();

  // Local 5-point slopes, centered; defined for i in [2, n-3].
  std::vector<double> local(n, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 2; i + 2 < n; ++i) {
    Eigen::VectorXd wx = lx.segment(static_cast<Eigen::Index>(i - 2), 5);
    Eigen::VectorXd wy = ly.segment(static_cast<Eigen::Index>(i - 2), 5);
    local[i] = linear_fit(wx, wy).slope;
  }

  for (std::size_t k = 0; k + min_points <= n; ++k) {
    double mn = std::numeric_limits<double>::infinity();
    double mx = -mn;
    for (std::size_t i = std::max<std::size_t>(k + 2, 2); i + 2 < n; ++i) {
      mn = std::min(mn, local[i]);
      mx = std::max(mx, local[i]);
    }
    if (mx - mn < max_spread) {
      return {k, n};
    }
  }
  return {n - min_points, n};
}

PowerLawFit fit_power_law_offset(const Eigen::Ref<const Eigen::VectorXd>& taus,
                                 const Eigen::Ref<const Eigen::VectorXd>& losses,
                                 std::uint64_t bootstrap_seed, int bootstrap_reps) {
  const Eigen::Index n = taus.size();
  if (n != losses.size()) {
    throw std::invalid_argument("fit_power_law_offset: size mismatch");
  }
  if (n < 8) {
    throw std::invalid_argument("fit_power_law_offset: need at least 8 points");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(taus[i] > 0.0)) {
      throw std::invalid_argument("fit_power_law_offset: taus must be positive");
    }
    if (i > 0 && !(taus[i] > taus[i - 1])) {
      throw std::invalid_argument("fit_power_law_offset: taus must be strictly increasing");
    }
    if (!(losses[i] > 0.0)) {
      throw std::invalid_argument("fit_power_law_offset: losses must be positive");
    }
  }

  Eigen::VectorXd ltau = taus.array().log().matrix();
  const double min_loss = losses.minCoeff();
  const double c_max = min_loss * (1.0 - 1e-6);

  auto best_offset = [&](const Eigen::VectorXd& lt, const Eigen::VectorXd& ls,
                         int grid) -> double {
    double best_c = 0.0;
    double best_r = std::numeric_limits<double>::infinity();
    int best_j = 0;
    const double cm = ls.minCoeff() * (1.0 - 1e-6);
    for (int j = 0; j < grid; ++j) {
      const double c = cm * static_cast<double>(j) / static_cast<double>(grid - 1);
      const double r = profile_residual(lt, ls, c);
      if (r < best_r) {
        best_r = r;
        best_c = c;
        best_j = j;
      }
    }
    // Golden-section refinement on the bracketing cells.
    const double cell = cm / static_cast<double>(grid - 1);
    double a = std::max(0.0, best_c - cell);
    double b = std::min(cm, best_c + cell);
    const double invphi = 0.6180339887498949;
    double x1 = b - invphi * (b - a);
    double x2 = a + invphi * (b - a);
    double f1 = profile_residual(lt, ls, x1);
    double f2 = profile_residual(lt, ls, x2);
    for (int it = 0; it < 60; ++it) {
      if (f1 < f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - invphi * (b - a);
        f1 = profile_residual(lt, ls, x1);
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + invphi * (b - a);
        f2 = profile_residual(lt, ls, x2);
      }
    }
    const double refined = 0.5 * (a + b);
    if (profile_residual(lt, ls, refined) <= best_r) {
      return refined;
    }
    (void)best_j;
    return best_c;
  };

  const double c_star = best_offset(ltau, losses, 129);
  Eigen::VectorXd lres = (losses.array() - c_star).log().matrix();
  LinFit f = linear_fit(ltau, lres);

  PowerLawFit out;
  out.offset = std::min(c_star, c_max);
  out.exponent = -f.slope;
  out.coefficient = std::exp(f.intercept);
  out.window = {0, static_cast<std::size_t>(n)};
  out.rms_residual = f.rms;
  out.fittable = std::isfinite(out.exponent) && f.slope < 0.0;

  if (out.fittable && bootstrap_reps > 0) {
    std::vector<double> alphas;
    alphas.reserve(static_cast<std::size_t>(bootstrap_reps));
    for (int rep = 0; rep < bootstrap_reps; ++rep) {
      rng::Stream stream(rng::derive_seed(bootstrap_seed, "bootstrap",
                                          static_cast<std::uint64_t>(rep)));
      Eigen::VectorXd bt(n), bl(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index j =
            static_cast<Eigen::Index>(stream.next_u64() % static_cast<std::uint64_t>(n));
        bt[i] = ltau[j];
        bl[i] = losses[j];
      }
      if ((bt.array() == bt[0]).all()) continue;  // degenerate resample
      const double c_rep = best_offset(bt, bl, 33);
      Eigen::VectorXd br = (bl.array() - c_rep).log().matrix();
      const double a_rep = -linear_fit(bt, br).slope;
      if (std::isfinite(a_rep)) alphas.push_back(a_rep);
    }
    if (alphas.size() > 1) {
      double mean = 0.0;
      for (double a : alphas) mean += a;
      mean /= static_cast<double>(alphas.size());
      double ss = 0.0;
      for (double a : alphas) ss += (a - mean) * (a - mean);
      out.bootstrap_stderr = std::sqrt(ss / static_cast<double>(alphas.size() - 1));
    }
  }
  return out;
}

double collapse_score(const std::vector<LossCurve>& curves, int grid_points) {
  if (curves.size() < 2) {
    throw std::invalid_argument("collapse_score: need at least 2 curves");
  }
  struct LogCurve {
    std::vector<double> lx, ly;
  };
  std::vector<LogCurve> logs;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (const auto& c : curves) {
    LogCurve lc;
    for (Eigen::Index i = 0; i < c.x.size(); ++i) {
      if (c.x[i] > 0.0 && c.loss[i] > 0.0) {
        lc.lx.push_back(std::log(c.x[i]));
        lc.ly.push_back(std::log(c.loss[i]));
      }
    }
    if (lc.lx.size() < 2) {
      throw std::invalid_argument("collapse_score: curve with fewer than 2 positive points");
    }
    lo = std::max(lo, lc.lx.front());
    hi = std::min(hi, lc.lx.back());
    logs.push_back(std::move(lc));
  }
  if (!(lo < hi)) {
    throw std::invalid_argument("collapse_score: curves have no overlapping x range");
  }

  auto interp = [](const LogCurve& c, double u) {
    auto it = std::lower_bound(c.lx.begin(), c.lx.end(), u);
    if (it == c.lx.begin()) return c.ly.front();
    if (it == c.lx.end()) return c.ly.back();
    const std::size_t j = static_cast<std::size_t>(it - c.lx.begin());
    const double x0 = c.lx[j - 1], x1 = c.lx[j];
    const double w = (x1 > x0) ? (u - x0) / (x1 - x0) : 0.0;
    return c.ly[j - 1] * (1.0 - w) + c.ly[j] * w;
  };

  double acc = 0.0;
  for (int g = 0; g < grid_points; ++g) {
    const double u =
        lo + (hi - lo) * static_cast<double>(g) / static_cast<double>(grid_points - 1);
    double mn = std::numeric_limits<double>::infinity();
    double mx = -mn;
    for (const auto& c : logs) {
      const double v = interp(c, u);
      mn = std::min(mn, v);
      mx = std::max(mx, v);
    }
    acc += std::exp(mx - mn) - 1.0;
  }
  return acc / static_cast<double>(grid_points);
}

}  // namespace sclab::fit
