#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace sclab::fit {

struct IndexWindow {
  std::size_t lo = 0;  // inclusive
  std::size_t hi = 0;  // exclusive
  std::size_t size() const { return hi - lo; }
};

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;  // in ln y
  double stderr_slope = 0.0;
};

// Least squares on (ln x, ln y) over [window.lo, window.hi). Rejects windows
// with fewer than 4 points or any nonpositive value.
SlopeFit loglog_slope(const Eigen::Ref<const Eigen::VectorXd>& xs,
                      const Eigen::Ref<const Eigen::VectorXd>& ys,
                      IndexWindow window);

// Trailing maximal window over which the 5-point local log-log slope varies
// by less than max_spread. Falls back to the last min_points points when no
// longer window qualifies. Requires positive data.
IndexWindow auto_window(const Eigen::Ref<const Eigen::VectorXd>& xs,
                        const Eigen::Ref<const Eigen::VectorXd>& ys,
                        double max_spread = 0.05, std::size_t min_points = 8);

struct PowerLawFit {
  double coefficient = 0.0;       // c in L = c / tau^alpha + offset
  double exponent = 0.0;          // alpha (positive for decaying loss)
  double offset = 0.0;
  IndexWindow window;             // points actually used
  double rms_residual = 0.0;      // log-space RMS over the window
  double bootstrap_stderr = 0.0;  // on the exponent
  bool fittable = true;
};

// Three-parameter offset power law via offset-profile search: grid over
// candidate offsets in [0, min(L)), log-log fit of the residual series,
// golden-section refinement around the best grid cell, then a 200-rep
// bootstrap for the exponent stderr. taus must be strictly increasing and
// losses positive; needs at least 8 points.
PowerLawFit fit_power_law_offset(const Eigen::Ref<const Eigen::VectorXd>& taus,
                                 const Eigen::Ref<const Eigen::VectorXd>& losses,
                                 std::uint64_t bootstrap_seed = 0,
                                 int bootstrap_reps = 200);

struct LossCurve {
  Eigen::VectorXd x;     // step or tau, positive entries are used
  Eigen::VectorXd loss;  // same length
};

// Mean over a common log-x grid of (max/min loss ratio across curves) - 1;
// 0 means perfect collapse. Rejects curve sets with no overlapping x range.
double collapse_score(const std::vector<LossCurve>& curves, int grid_points = 64);

}  // namespace sclab::fit
