#include "sclab/svg.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace sclab::svg {

namespace {

constexpr double kWidth = 800.0, kHeight = 600.0;
constexpr double kLeft = 70.0, kRight = 780.0, kTop = 40.0, kBottom = 550.0;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
                          "#bcbd22", "#e377c2", "#aec7e8", "#98df8a"};
constexpr int kPaletteSize = 12;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Axis {
  bool log = false;
  double lo = 0.0, hi = 1.0;  // in plot units (log10 when log)

  double unit(double v) const { return log ? std::log10(v) : v; }
  double frac(double v) const { return (unit(v) - lo) / (hi - lo); }
};

}  // namespace

std::string render_lines_svg(const std::vector<Series>& series, const AxesSpec& axes) {
  if (series.empty()) {
    throw std::invalid_argument("render_lines_svg: no series");
  }
  Axis ax{axes.logx, 0, 1}, ay{axes.logy, 0, 1};
  bool first = true;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size() || s.x.size() == 0) {
      throw std::invalid_argument("render_lines_svg: series '" + s.label +
                                  "' is empty or ragged");
    }
    for (Eigen::Index i = 0; i < s.x.size(); ++i) {
      if (axes.logx && !(s.x[i] > 0.0)) {
        throw std::invalid_argument("render_lines_svg: series '" + s.label +
                                    "' row " + std::to_string(i) +
                                    " has nonpositive x on a log axis");
      }
      if (axes.logy && !(s.y[i] > 0.0)) {
        throw std::invalid_argument("render_lines_svg: series '" + s.label +
                                    "' row " + std::to_string(i) +
                                    " has nonpositive y on a log axis");
      }
      const double ux = ax.unit(s.x[i]);
      const double uy = ay.unit(s.y[i]);
      if (first) {
        ax.lo = ax.hi = ux;
        ay.lo = ay.hi = uy;
        first = false;
      } else {
        ax.lo = std::min(ax.lo, ux);
        ax.hi = std::max(ax.hi, ux);
        ay.lo = std::min(ay.lo, uy);
        ay.hi = std::max(ay.hi, uy);
      }
    }
  }
  const double data_x_hi = ax.hi, data_y_hi = ay.hi, data_x_lo = ax.lo;
  if (ax.hi - ax.lo < 1e-12) {
    ax.lo -= 0.5;
    ax.hi += 0.5;
  }
  if (ay.hi - ay.lo < 1e-12) {
    ay.lo -= 0.5;
    ay.hi += 0.5;
  }

  auto px = [&](double v) { return kLeft + ax.frac(v) * (kRight - kLeft); };
  auto py = [&](double v) { return kBottom - ay.frac(v) * (kBottom - kTop); };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"600\" "
         "viewBox=\"0 0 800 600\">\n";
  out += "<rect x=\"0\" y=\"0\" width=\"800\" height=\"600\" fill=\"white\"/>\n";
  out += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" +
         num(kRight - kLeft) + "\" height=\"" + num(kBottom - kTop) +
         "\" fill=\"none\" stroke=\"black\"/>\n";

  auto decade_ticks = [](double lo, double hi) {
    std::vector<double> ticks;
    for (double d = std::ceil(lo - 1e-9); d <= hi + 1e-9; d += 1.0) {
      ticks.push_back(d);
    }
    return ticks;
  };
  auto linear_ticks = [](double lo, double hi) {
    const double span = hi - lo;
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    if (raw / mag > 5.0) step = 10.0 * mag;
    else if (raw / mag > 2.0) step = 5.0 * mag;
    else if (raw / mag > 1.0) step = 2.0 * mag;
    std::vector<double> ticks;
    for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * span; v += step) {
      ticks.push_back(v);
    }
    return ticks;
  };

  auto tick_label = [&](double unit_value, bool log) {
    char buf[32];
    if (log) {
      std::snprintf(buf, sizeof(buf), "1e%d", static_cast<int>(std::lround(unit_value)));
    } else {
      std::snprintf(buf, sizeof(buf), "%g", unit_value);
    }
    return std::string(buf);
  };

  for (double t : (axes.logx ? decade_ticks(ax.lo, ax.hi) : linear_ticks(ax.lo, ax.hi))) {
    const double x = kLeft + (t - ax.lo) / (ax.hi - ax.lo) * (kRight - kLeft);
    out += "<line x1=\"" + num(x) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(x) +
           "\" y2=\"" + num(kBottom) + "\" stroke=\"#dddddd\"/>\n";
    out += "<text x=\"" + num(x) + "\" y=\"" + num(kBottom + 18.0) +
           "\" font-size=\"12\" text-anchor=\"middle\">" + tick_label(t, axes.logx) +
           "</text>\n";
  }
  for (double t : (axes.logy ? decade_ticks(ay.lo, ay.hi) : linear_ticks(ay.lo, ay.hi))) {
    const double y = kBottom - (t - ay.lo) / (ay.hi - ay.lo) * (kBottom - kTop);
    out += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(y) + "\" x2=\"" + num(kRight) +
           "\" y2=\"" + num(y) + "\" stroke=\"#dddddd\"/>\n";
    out += "<text x=\"" + num(kLeft - 6.0) + "\" y=\"" + num(y + 4.0) +
           "\" font-size=\"12\" text-anchor=\"end\">" + tick_label(t, axes.logy) +
           "</text>\n";
  }

  if (!axes.title.empty()) {
    out += "<text x=\"400.00\" y=\"24.00\" font-size=\"16\" text-anchor=\"middle\">" +
           escape(axes.title) + "</text>\n";
  }
  out += "<text x=\"" + num(0.5 * (kLeft + kRight)) + "\" y=\"" + num(kHeight - 10.0) +
         "\" font-size=\"13\" text-anchor=\"middle\">" + escape(axes.x_label) +
         "</text>\n";
  out += "<text x=\"16.00\" y=\"" + num(0.5 * (kTop + kBottom)) +
         "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         num(0.5 * (kTop + kBottom)) + ")\">" + escape(axes.y_label) + "</text>\n";

  if (axes.ref_slope) {
    if (!(axes.logx && axes.logy)) {
      throw std::invalid_argument("render_lines_svg: ref_slope needs log-log axes");
    }
    const double slope = *axes.ref_slope;
    const double u0 = data_x_lo, u1 = data_x_hi;
    const double v0 = data_y_hi;
    const double v1 = v0 + slope * (u1 - u0);
    const double x0 = kLeft + (u0 - ax.lo) / (ax.hi - ax.lo) * (kRight - kLeft);
    const double x1 = kLeft + (u1 - ax.lo) / (ax.hi - ax.lo) * (kRight - kLeft);
    const double yy0 = kBottom - (v0 - ay.lo) / (ay.hi - ay.lo) * (kBottom - kTop);
    const double yy1 = kBottom - (v1 - ay.lo) / (ay.hi - ay.lo) * (kBottom - kTop);
    out += "<line x1=\"" + num(x0) + "\" y1=\"" + num(yy0) + "\" x2=\"" + num(x1) +
           "\" y2=\"" + num(yy1) +
           "\" stroke=\"#888888\" stroke-dasharray=\"6,4\"/>\n";
    char lbl[48];
    std::snprintf(lbl, sizeof(lbl), "slope %g", slope);
    out += "<text x=\"" + num(x1 - 4.0) + "\" y=\"" + num(yy1 - 6.0) +
           "\" font-size=\"12\" text-anchor=\"end\" fill=\"#888888\">" + lbl +
           "</text>\n";
  }

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % kPaletteSize];
    const auto& ser = series[s];
    if (ser.x.size() == 1) {
      out += "<circle cx=\"" + num(px(ser.x[0])) + "\" cy=\"" + num(py(ser.y[0])) +
             "\" r=\"4.00\" fill=\"" + std::string(color) + "\"/>\n";
    } else {
      out += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
             "\" stroke-width=\"1.5\" points=\"";
      for (Eigen::Index i = 0; i < ser.x.size(); ++i) {
        if (i) out += ' ';
        out += num(px(ser.x[i])) + "," + num(py(ser.y[i]));
      }
      out += "\"/>\n";
    }
  }

  // Legend, top-right corner of the plot area.
  double ly = kTop + 16.0;
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % kPaletteSize];
    out += "<line x1=\"" + num(kRight - 150.0) + "\" y1=\"" + num(ly - 4.0) +
           "\" x2=\"" + num(kRight - 120.0) + "\" y2=\"" + num(ly - 4.0) +
           "\" stroke=\"" + std::string(color) + "\" stroke-width=\"2\"/>\n";
    out += "<text x=\"" + num(kRight - 114.0) + "\" y=\"" + num(ly) +
           "\" font-size=\"12\">" + escape(series[s].label) + "</text>\n";
    ly += 16.0;
  }

  out += "</svg>\n";
  return out;
}

}  // namespace sclab::svg
