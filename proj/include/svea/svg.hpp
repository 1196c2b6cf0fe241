#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace svea {

/// One line; `lo` and `hi` (same length as `x`, or empty) draw a shaded band.
struct SvgSeries {
  std::string label;
  std::vector<double> x, y, lo, hi;
};

struct SvgPanel {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<SvgSeries> series;
};

/// SVG 1.1 document with the panels laid out left to right.
std::string render_svg(const std::vector<SvgPanel>& panels);
void write_svg(const std::filesystem::path& path, const std::vector<SvgPanel>& panels);

}  // namespace svea
