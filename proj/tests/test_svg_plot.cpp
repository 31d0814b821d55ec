#include <doctest.h>

#include <cmath>
#include <set>
#include <string>

#include "ddlab/errors.hpp"
#include "ddlab/svg_plot.hpp"

using namespace ddlab;

namespace {

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
  return n;
}

AggregateSeries curve(const std::string& arch, int points, double level) {
  AggregateSeries s{arch, {}};
  for (int e = 1; e <= points; ++e) {
    const double m = level * std::exp(-e / 400.0);
    s.points.push_back({e, m, m - 0.05, m + 0.05, 15});
  }
  return s;
}

}  // namespace

TEST_CASE("one architecture gives one band and one line") {
  PlotSpec spec;
  spec.series = {curve("64", 5000, 1.3)};
  const std::string svg = render_svg(spec);
  CHECK(svg.rfind("<?xml", 0) == 0);
  CHECK(count(svg, "<svg ") == 1);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(count(svg, "<path") == 2);
  CHECK(count(svg, "class=\"ci-band\"") == 1);
  CHECK(count(svg, "class=\"mean-line\"") == 1);
  CHECK(svg.find("Training Episodes") != std::string::npos);
  CHECK(svg.find("Policy Entropy (nats)") != std::string::npos);
}

TEST_CASE("five architectures give five legend entries") {
  PlotSpec spec;
  for (const char* a : {"64", "64-64", "64-64-64", "128-128", "128-128-128"}) {
    spec.series.push_back(curve(a, 300, 1.0 + 0.05 * static_cast<double>(spec.series.size())));
  }
  const std::string svg = render_svg(spec);
  CHECK(count(svg, "<path") == 10);
  CHECK(count(svg, "class=\"legend-entry\"") == 5);
  CHECK(svg.find("[128, 128, 128]") != std::string::npos);
  CHECK(svg.find("[64]") != std::string::npos);
  CHECK(svg.find("href") == std::string::npos);
  CHECK(svg.find("url(") == std::string::npos);
  CHECK(render_svg(spec) == svg);
}

TEST_CASE("labels are escaped") {
  PlotSpec spec;
  spec.series = {curve("64", 10, 1.0)};
  spec.title = "a < b & \"c\"";
  const std::string svg = render_svg(spec);
  CHECK(svg.find("a &lt; b &amp;") != std::string::npos);
  CHECK(svg.find("a < b") == std::string::npos);
}

TEST_CASE("colors") {
  const auto colors = default_colors(25);
  CHECK(std::set<std::string>(colors.begin(), colors.end()).size() == 25);
  CHECK(default_colors(3) == std::vector<std::string>(colors.begin(), colors.begin() + 3));
  CHECK(legend_label("64-64") == "[64, 64]");
  CHECK(legend_label("128") == "[128]");
}

TEST_CASE("invalid plot specs") {
  PlotSpec empty;
  CHECK_THROWS_AS(render_svg(empty), UsageError);
  PlotSpec no_points;
  no_points.series = {AggregateSeries{"64", {}}};
  CHECK_THROWS_AS(render_svg(no_points), UsageError);
  PlotSpec dup;
  dup.series = {curve("64", 10, 1.0), curve("64-64", 10, 1.0)};
  dup.colors = {"#000000", "#000000"};
  CHECK_THROWS_AS(render_svg(dup), UsageError);
  dup.colors = {"#000000"};
  CHECK_THROWS_AS(render_svg(dup), UsageError);
}
