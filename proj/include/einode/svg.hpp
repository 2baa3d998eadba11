#pragma once

// Line plots written directly as SVG polylines.

#include <limits>
#include <string>
#include <vector>

namespace einode {

struct PlotSeries {
  std::string label;
  std::vector<double> x, y;
  bool dashed = false;
};

struct PlotPanel {
  std::string title;
  std::string x_label, y_label;
  bool log_y = false;
  /// Optional horizontal reference line (drawn when finite).
  double reference_y = std::numeric_limits<double>::quiet_NaN();
  std::vector<PlotSeries> series;
};

/// Panels stacked vertically. Non-finite points (and non-positive ones on a log axis) split the
/// polyline instead of being drawn.
std::string render_svg(const std::vector<PlotPanel>& panels, double width = 720.0,
                       double panel_height = 260.0);

void write_svg(const std::string& path, const std::vector<PlotPanel>& panels);

}  // namespace einode
