#pragma once

#include <string>
#include <vector>

namespace sclab {

// Self-contained SVG line/scatter plots; no binary plotting dependencies.
struct PlotSeries {
  std::string name;
  std::vector<std::pair<double, double>> points;
  bool scatter = false;  // points instead of a polyline
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  std::vector<PlotSeries> series;
};

std::string render_svg(const PlotSpec& spec, int width = 640, int height = 420);
void write_svg(const std::string& path, const PlotSpec& spec, int width = 640, int height = 420);

}  // namespace sclab
