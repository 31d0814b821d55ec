#pragma once

#include <string>
#include <vector>

#include "ddlab/analysis.hpp"

namespace ddlab {

struct PlotSpec {
  std::vector<AggregateSeries> series;
  std::string x_label = "Training Episodes";
  std::string y_label = "Policy Entropy (nats)";
  std::string title = "Policy entropy by network capacity";
  int smoothing_window = 0;  // echoed in the subtitle when positive
  std::vector<std::string> colors;  // filled by default_colors() when empty

  void validate() const;
};

/// n distinct colors: a fixed ten-color palette, then golden-angle hues.
std::vector<std::string> default_colors(std::size_t n);

/// Turns "64-64-64" into "[64, 64, 64]"; other labels pass through.
std::string legend_label(const std::string& arch);

/// Self-contained SVG: per architecture one translucent CI band path and one
/// mean line path, plus axes and a legend. Output bytes depend only on the spec.
std::string render_svg(const PlotSpec& spec);

}  // namespace ddlab
