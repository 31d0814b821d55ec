#include "ddlab/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

#include "ddlab/errors.hpp"

namespace ddlab {

namespace {

constexpr double kWidth = 960.0;
constexpr double kHeight = 560.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 210.0;
constexpr double kTop = 60.0;
constexpr double kBottom = 70.0;
constexpr std::size_t kMaxPointsPerSeries = 1200;

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Tick spacing from the 1-2-5 sequence giving roughly `target` intervals.
double nice_step(double range, int target) {
  if (!(range > 0.0)) return 1.0;
  const double raw = range / target;
  const double magnitude = std::pow(10.0, std::floor(std::log10(raw)));
  const double norm = raw / magnitude;
  const double step = norm <= 1.0 ? 1.0 : norm <= 2.0 ? 2.0 : norm <= 5.0 ? 5.0 : 10.0;
  return step * magnitude;
}

std::string tick_text(double v, double step) {
  char buf[32];
  const int decimals = step >= 1.0 ? 0 : static_cast<int>(std::ceil(-std::log10(step) - 1e-9));
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::vector<std::size_t> sample_indices(std::size_t n) {
  std::vector<std::size_t> idx;
  if (n <= kMaxPointsPerSeries) {
    for (std::size_t i = 0; i < n; ++i) idx.push_back(i);
    return idx;
  }
  const std::size_t stride = (n + kMaxPointsPerSeries - 1) / kMaxPointsPerSeries;
  for (std::size_t i = 0; i < n; i += stride) idx.push_back(i);
  if (idx.back() != n - 1) idx.push_back(n - 1);
  return idx;
}

}  // namespace

void PlotSpec::validate() const {
  if (series.empty()) {
    throw UsageError("plot needs at least one series");
  }
  for (const auto& s : series) {
    if (s.points.empty()) {
      throw UsageError("series '" + s.arch + "' has no points");
    }
  }
  if (!colors.empty()) {
    if (colors.size() < series.size()) {
      throw UsageError("fewer colors than series");
    }
    std::set<std::string> distinct(colors.begin(), colors.begin() + static_cast<std::ptrdiff_t>(series.size()));
    if (distinct.size() != series.size()) {
      throw UsageError("plot colors must be distinct per architecture");
    }
  }
}

std::vector<std::string> default_colors(std::size_t n) {
  static const std::vector<std::string> kPalette = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                                    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                                                    "#bcbd22", "#17becf"};
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i < kPalette.size()) {
      out.push_back(kPalette[i]);
    } else {
      const double hue = std::fmod(static_cast<double>(i) * 137.50776405, 360.0);
      char buf[48];
      std::snprintf(buf, sizeof buf, "hsl(%.1f,65%%,45%%)", hue);
      out.push_back(buf);
    }
  }
  return out;
}

std::string legend_label(const std::string& arch) {
  if (arch.empty() || arch.find_first_not_of("0123456789-") != std::string::npos) {
    return arch;
  }
  std::string out = "[";
  for (char c : arch) {
    if (c == '-') {
      out += ", ";
    } else {
      out += c;
    }
  }
  return out + "]";
}

std::string render_svg(const PlotSpec& spec) {
  spec.validate();
  const auto colors = spec.colors.empty() ? default_colors(spec.series.size()) : spec.colors;

  double x_min = std::numeric_limits<double>::infinity();
  double x_max = -x_min;
  double y_min = 0.0;  // entropy-like quantities are non-negative; keep 0 in view
  double y_max = -std::numeric_limits<double>::infinity();
  for (const auto& s : spec.series) {
    for (const auto& p : s.points) {
      x_min = std::min(x_min, static_cast<double>(p.episode));
      x_max = std::max(x_max, static_cast<double>(p.episode));
      y_min = std::min(y_min, p.ci_low);
      y_max = std::max(y_max, p.ci_high);
    }
  }
  if (x_max <= x_min) x_max = x_min + 1.0;
  if (y_max <= y_min) y_max = y_min + 1.0;
  const double y_step = nice_step(y_max - y_min, 8);
  // Axis limits hug the data; ticks sit on multiples of the step inside them.
  const double pad = 0.03 * (y_max - y_min);
  y_min = std::max(y_min - pad, std::floor(y_min / y_step) * y_step);
  y_max = std::min(y_max + pad, std::ceil(y_max / y_step) * y_step);
  std::vector<double> y_ticks;
  for (auto k = static_cast<long>(std::ceil(y_min / y_step - 1e-9)); k * y_step <= y_max + 1e-9 * y_step; ++k) {
    y_ticks.push_back(static_cast<double>(k) * y_step);
  }

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - x_min) / (x_max - x_min) * plot_w; };
  auto py = [&](double y) { return kTop + (y_max - y) / (y_max - y_min) * plot_h; };

  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" +
         num(kHeight) + "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) +
         "\" font-family=\"sans-serif\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
         "\" fill=\"#ffffff\"/>\n";
  svg += "<text x=\"" + num(kLeft + plot_w / 2) + "\" y=\"28\" text-anchor=\"middle\" font-size=\"17\">" +
         escape(spec.title) + "</text>\n";
  if (spec.smoothing_window > 0) {
    svg += "<text x=\"" + num(kLeft + plot_w / 2) +
           "\" y=\"46\" text-anchor=\"middle\" font-size=\"12\" fill=\"#555555\">mean with 95% CI, smoothing window " +
           std::to_string(spec.smoothing_window) + "</text>\n";
  }

  // Grid and ticks.
  svg += "<g class=\"axes\" stroke=\"#000000\" stroke-width=\"1\">\n";
  for (double y : y_ticks) {
    svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(py(y)) + "\" x2=\"" + num(kLeft + plot_w) +
           "\" y2=\"" + num(py(y)) + "\" stroke=\"#e0e0e0\"/>\n";
  }
  const double x_step = nice_step(x_max - x_min, 8);
  for (double x = std::ceil(x_min / x_step) * x_step; x <= x_max + 1e-9; x += x_step) {
    svg += "<line x1=\"" + num(px(x)) + "\" y1=\"" + num(kTop + plot_h) + "\" x2=\"" + num(px(x)) +
           "\" y2=\"" + num(kTop + plot_h + 5) + "\"/>\n";
  }
  svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop + plot_h) + "\" x2=\"" + num(kLeft + plot_w) +
         "\" y2=\"" + num(kTop + plot_h) + "\"/>\n";
  svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(kLeft) + "\" y2=\"" +
         num(kTop + plot_h) + "\"/>\n";
  svg += "</g>\n";

  svg += "<g class=\"tick-labels\" font-size=\"11\" fill=\"#000000\">\n";
  for (double y : y_ticks) {
    svg += "<text x=\"" + num(kLeft - 8) + "\" y=\"" + num(py(y) + 4) + "\" text-anchor=\"end\">" +
           tick_text(y, y_step) + "</text>\n";
  }
  for (double x = std::ceil(x_min / x_step) * x_step; x <= x_max + 1e-9; x += x_step) {
    svg += "<text x=\"" + num(px(x)) + "\" y=\"" + num(kTop + plot_h + 20) + "\" text-anchor=\"middle\">" +
           tick_text(x, x_step) + "</text>\n";
  }
  svg += "</g>\n";
  svg += "<text x=\"" + num(kLeft + plot_w / 2) + "\" y=\"" + num(kHeight - 20) +
         "\" text-anchor=\"middle\" font-size=\"13\">" + escape(spec.x_label) + "</text>\n";
  svg += "<text x=\"22\" y=\"" + num(kTop + plot_h / 2) + "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 22 " +
         num(kTop + plot_h / 2) + ")\">" + escape(spec.y_label) + "</text>\n";

  // Bands first so every mean line draws on top of every band.
  for (std::size_t k = 0; k < spec.series.size(); ++k) {
    const auto& pts = spec.series[k].points;
    const auto idx = sample_indices(pts.size());
    std::string d;
    for (std::size_t j = 0; j < idx.size(); ++j) {
      const auto& p = pts[idx[j]];
      d += (j == 0 ? "M" : " L") + num(px(p.episode)) + " " + num(py(p.ci_high));
    }
    for (std::size_t j = idx.size(); j-- > 0;) {
      const auto& p = pts[idx[j]];
      d += " L" + num(px(p.episode)) + " " + num(py(p.ci_low));
    }
    d += " Z";
    svg += "<path class=\"ci-band\" d=\"" + d + "\" fill=\"" + colors[k] +
           "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
  }
  for (std::size_t k = 0; k < spec.series.size(); ++k) {
    const auto& pts = spec.series[k].points;
    const auto idx = sample_indices(pts.size());
    std::string d;
    for (std::size_t j = 0; j < idx.size(); ++j) {
      const auto& p = pts[idx[j]];
      d += (j == 0 ? "M" : " L") + num(px(p.episode)) + " " + num(py(p.mean));
    }
    svg += "<path class=\"mean-line\" d=\"" + d + "\" fill=\"none\" stroke=\"" + colors[k] +
           "\" stroke-width=\"1.8\"/>\n";
  }

  svg += "<g class=\"legend\" font-size=\"12\">\n";
  for (std::size_t k = 0; k < spec.series.size(); ++k) {
    const double y = kTop + 10 + 22.0 * static_cast<double>(k);
    const double x = kLeft + plot_w + 20;
    svg += "<g class=\"legend-entry\"><rect x=\"" + num(x) + "\" y=\"" + num(y - 6) +
           "\" width=\"24\" height=\"12\" fill=\"" + colors[k] + "\" fill-opacity=\"0.35\" stroke=\"" + colors[k] +
           "\"/><text x=\"" + num(x + 32) + "\" y=\"" + num(y + 4) + "\">" +
           escape(legend_label(spec.series[k].arch)) + "</text></g>\n";
  }
  svg += "</g>\n</svg>\n";
  return svg;
}

}  // namespace ddlab
