#pragma once
// Minimal static SVG rendering: line charts of time series and the shaded
// regime diagram.

#include <string>
#include <vector>

#include "keen/scans.hpp"

namespace keen {

struct SvgSeries {
  std::string label;
  std::vector<double> x, y;
};

std::string svg_line_chart(const std::vector<SvgSeries>& series,
                           const std::string& title,
                           const std::string& x_label,
                           const std::string& y_label, bool log_y = false);

std::string svg_regime_map(const RegimeGrid& grid, const std::string& title);

}  // namespace keen
