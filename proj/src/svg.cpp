#include "sclab/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "sclab/errors.hpp"

namespace sclab {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
constexpr int kPaletteSize = 10;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void pad() {
    if (!std::isfinite(lo)) {
      lo = 0;
      hi = 1;
    }
    if (lo == hi) {
      lo -= 0.5;
      hi += 0.5;
    }
    const double margin = 0.05 * (hi - lo);
    lo -= margin;
    hi += margin;
  }
};

std::vector<double> ticks(double lo, double hi, int target = 5) {
  const double span = hi - lo;
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (raw <= m * mag) {
      step = m * mag;
      break;
    }
  }
  std::vector<double> out;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-12 * span; t += step) out.push_back(t);
  return out;
}

}  // namespace

std::string render_svg(const PlotSpec& spec, int width, int height) {
  const double ml = 62, mr = 18, mt = 34, mb = 46;
  const double pw = width - ml - mr;
  const double ph = height - mt - mb;

  Range xr, yr;
  for (const auto& s : spec.series) {
    for (const auto& [x, y] : s.points) {
      xr.add(spec.log_x ? std::log10(std::max(x, 1e-12)) : x);
      yr.add(y);
    }
  }
  xr.pad();
  yr.pad();

  auto px = [&](double x) {
    const double v = spec.log_x ? std::log10(std::max(x, 1e-12)) : x;
    return ml + (v - xr.lo) / (xr.hi - xr.lo) * pw;
  };
  auto py = [&](double y) { return mt + (yr.hi - y) / (yr.hi - yr.lo) * ph; };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
         "\" height=\"" + std::to_string(height) + "\" font-family=\"sans-serif\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + num(width / 2.0) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" +
         spec.title + "</text>\n";

  // axes
  svg += "<line x1=\"" + num(ml) + "\" y1=\"" + num(mt + ph) + "\" x2=\"" + num(ml + pw) +
         "\" y2=\"" + num(mt + ph) + "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + num(ml) + "\" y1=\"" + num(mt) + "\" x2=\"" + num(ml) + "\" y2=\"" +
         num(mt + ph) + "\" stroke=\"black\"/>\n";

  for (double t : ticks(xr.lo, xr.hi)) {
    const double x = ml + (t - xr.lo) / (xr.hi - xr.lo) * pw;
    svg += "<line x1=\"" + num(x) + "\" y1=\"" + num(mt + ph) + "\" x2=\"" + num(x) + "\" y2=\"" +
           num(mt + ph + 4) + "\" stroke=\"black\"/>\n";
    const double label = spec.log_x ? std::pow(10.0, t) : t;
    svg += "<text x=\"" + num(x) + "\" y=\"" + num(mt + ph + 17) +
           "\" text-anchor=\"middle\" font-size=\"10\">" + num(label) + "</text>\n";
  }
  for (double t : ticks(yr.lo, yr.hi)) {
    const double y = mt + (yr.hi - t) / (yr.hi - yr.lo) * ph;
    svg += "<line x1=\"" + num(ml - 4) + "\" y1=\"" + num(y) + "\" x2=\"" + num(ml) + "\" y2=\"" +
           num(y) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + num(ml - 7) + "\" y=\"" + num(y + 3) +
           "\" text-anchor=\"end\" font-size=\"10\">" + num(t) + "</text>\n";
  }
  svg += "<text x=\"" + num(ml + pw / 2) + "\" y=\"" + num(double(height) - 8) +
         "\" text-anchor=\"middle\" font-size=\"12\">" + spec.x_label + "</text>\n";
  svg += "<text x=\"14\" y=\"" + num(mt + ph / 2) + "\" text-anchor=\"middle\" font-size=\"12\" " +
         "transform=\"rotate(-90 14 " + num(mt + ph / 2) + ")\">" + spec.y_label + "</text>\n";

  int ci = 0;
  for (const auto& s : spec.series) {
    const std::string color = kPalette[ci % kPaletteSize];
    if (s.scatter) {
      for (const auto& [x, y] : s.points) {
        svg += "<circle cx=\"" + num(px(x)) + "\" cy=\"" + num(py(y)) +
               "\" r=\"2.4\" fill=\"" + color + "\" fill-opacity=\"0.65\"/>\n";
      }
    } else if (!s.points.empty()) {
      svg += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.6\" points=\"";
      for (const auto& [x, y] : s.points) svg += num(px(x)) + "," + num(py(y)) + " ";
      svg += "\"/>\n";
    }
    // legend
    const double ly = mt + 14.0 * ci;
    svg += "<rect x=\"" + num(ml + pw - 130) + "\" y=\"" + num(ly - 8) +
           "\" width=\"10\" height=\"10\" fill=\"" + color + "\"/>\n";
    svg += "<text x=\"" + num(ml + pw - 116) + "\" y=\"" + num(ly + 1) + "\" font-size=\"10\">" +
           s.name + "</text>\n";
    ++ci;
  }
  svg += "</svg>\n";
  return svg;
}

void write_svg(const std::string& path, const PlotSpec& spec, int width, int height) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("write_svg: cannot open " + path);
  out << render_svg(spec, width, height);
  if (!out) throw IoError("write_svg: write failed for " + path);
}

}  // namespace sclab
