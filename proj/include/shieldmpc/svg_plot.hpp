#pragma once

#include <string>
#include <vector>

namespace shieldmpc {

struct PlotSeries {
  std::string label;
  std::vector<double> x, y;
};

// Static SVG line chart; presentation only.
void write_line_svg(const std::string& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<PlotSeries>& series);

// Grouped bar chart over [0, 1] bins, one group per series.
void write_histogram_svg(const std::string& path, const std::string& title,
                         const std::vector<PlotSeries>& series);

}  // namespace shieldmpc
