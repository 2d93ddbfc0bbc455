#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace sclab::svg {

struct Series {
  std::string label;
  Eigen::VectorXd x;
  Eigen::VectorXd y;
};

struct AxesSpec {
  bool logx = false;
  bool logy = false;
  std::string x_label = "x";
  std::string y_label = "y";
  std::string title;
  // Dashed guide with this log-log slope, anchored at the top-left data
  // corner and spanning the full x range. Requires logx && logy.
  std::optional<double> ref_slope;
};

// Deterministic 800x600 line plot: same input, byte-identical output.
// Log axes put gridlines on decade boundaries; the value->pixel map is
// affine in log10. A nonpositive value on a log axis is rejected with the
// series name and row index.
std::string render_lines_svg(const std::vector<Series>& series, const AxesSpec& axes);

}  // namespace sclab::svg
