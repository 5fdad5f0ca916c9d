#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace fgd {

struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

/// Minimal SVG line chart. With log_y the y values must be positive; zeros
/// are clamped to the smallest positive value in the data.
void write_line_chart_svg(const std::filesystem::path& path,
                          const std::string& title, const std::string& x_label,
                          const std::string& y_label,
                          const std::vector<PlotSeries>& series, bool log_y);

}  // namespace fgd
