#pragma once

// Self-contained SVG emission for the handful of plots the CLI produces:
// line/marker series with optional error bars over numeric axes, and scatter
// plots with a reference line. Text only, no dependencies.

#include <optional>
#include <string>
#include <vector>

namespace gpc {

struct SvgSeries {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> yerr;  // empty = no error bars
  std::string label;
  std::string color = "#1f6fb2";
  bool line = true;
  bool markers = true;
};

struct SvgChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<SvgSeries> series;
  // Optional y = x reference line (bound-vs-measured scatters).
  bool diagonal = false;
  int width = 640;
  int height = 420;
};

std::string render_svg(const SvgChart& chart);
void write_svg(const std::string& path, const SvgChart& chart);

}  // namespace gpc
