#include "gpc/svg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "gpc/util.hpp"

namespace gpc {

namespace {

struct AxisRange {
  double lo = 0.0;
  double hi = 1.0;
};

AxisRange pad_range(double lo, double hi) {
  if (!(lo <= hi)) {
    lo = 0.0;
    hi = 1.0;
  }
  double span = hi - lo;
  if (span <= 0.0) span = std::max(1.0, std::abs(hi));
  return {lo - 0.05 * span, hi + 0.05 * span};
}

std::string escape_xml(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fmt(double v) { return format_double(v); }

}  // namespace

std::string render_svg(const SvgChart& chart) {
  const double margin_left = 64.0, margin_right = 18.0, margin_top = 34.0, margin_bottom = 48.0;
  const double plot_w = chart.width - margin_left - margin_right;
  const double plot_h = chart.height - margin_top - margin_bottom;
  if (plot_w <= 0.0 || plot_h <= 0.0) throw std::invalid_argument("svg chart too small");

  double x_lo = 0.0, x_hi = 1.0, y_lo = 0.0, y_hi = 1.0;
  bool any = false;
  for (const SvgSeries& s : chart.series) {
    if (s.x.size() != s.y.size()) throw std::invalid_argument("svg series length mismatch");
    if (!s.yerr.empty() && s.yerr.size() != s.y.size()) {
      throw std::invalid_argument("svg series error-bar length mismatch");
    }
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double e = s.yerr.empty() ? 0.0 : s.yerr[i];
      if (!any) {
        x_lo = x_hi = s.x[i];
        y_lo = s.y[i] - e;
        y_hi = s.y[i] + e;
        any = true;
      } else {
        x_lo = std::min(x_lo, s.x[i]);
        x_hi = std::max(x_hi, s.x[i]);
        y_lo = std::min(y_lo, s.y[i] - e);
        y_hi = std::max(y_hi, s.y[i] + e);
      }
    }
  }
  if (chart.diagonal && any) {
    const double lo = std::min(x_lo, y_lo);
    const double hi = std::max(x_hi, y_hi);
    x_lo = y_lo = lo;
    x_hi = y_hi = hi;
  }
  const AxisRange xr = pad_range(x_lo, x_hi);
  const AxisRange yr = pad_range(y_lo, y_hi);

  const auto px = [&](double x) {
    return margin_left + (x - xr.lo) / (xr.hi - xr.lo) * plot_w;
  };
  const auto py = [&](double y) {
    return margin_top + (yr.hi - y) / (yr.hi - yr.lo) * plot_h;
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << chart.width << "\" height=\""
      << chart.height << "\" viewBox=\"0 0 " << chart.width << ' ' << chart.height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  svg << "<text x=\"" << chart.width / 2 << "\" y=\"20\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"14\">" << escape_xml(chart.title) << "</text>\n";

  // Frame and ticks (5 per axis).
  svg << "<rect x=\"" << fmt(margin_left) << "\" y=\"" << fmt(margin_top) << "\" width=\""
      << fmt(plot_w) << "\" height=\"" << fmt(plot_h)
      << "\" fill=\"none\" stroke=\"#444444\" stroke-width=\"1\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double fx = xr.lo + (xr.hi - xr.lo) * k / 4.0;
    const double fy = yr.lo + (yr.hi - yr.lo) * k / 4.0;
    const double gx = px(fx);
    const double gy = py(fy);
    svg << "<line x1=\"" << fmt(gx) << "\" y1=\"" << fmt(margin_top + plot_h) << "\" x2=\""
        << fmt(gx) << "\" y2=\"" << fmt(margin_top + plot_h + 5) << "\" stroke=\"#444444\"/>\n";
    svg << "<text x=\"" << fmt(gx) << "\" y=\"" << fmt(margin_top + plot_h + 18)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">"
        << fmt(std::round(fx * 1e4) / 1e4) << "</text>\n";
    svg << "<line x1=\"" << fmt(margin_left - 5) << "\" y1=\"" << fmt(gy) << "\" x2=\""
        << fmt(margin_left) << "\" y2=\"" << fmt(gy) << "\" stroke=\"#444444\"/>\n";
    svg << "<text x=\"" << fmt(margin_left - 8) << "\" y=\"" << fmt(gy + 3)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
        << fmt(std::round(fy * 1e4) / 1e4) << "</text>\n";
  }
  svg << "<text x=\"" << chart.width / 2 << "\" y=\"" << chart.height - 8
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
      << escape_xml(chart.x_label) << "</text>\n";
  svg << "<text x=\"14\" y=\"" << chart.height / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
      << "transform=\"rotate(-90 14 " << chart.height / 2 << ")\">" << escape_xml(chart.y_label)
      << "</text>\n";

  if (chart.diagonal) {
    svg << "<line x1=\"" << fmt(px(xr.lo)) << "\" y1=\"" << fmt(py(xr.lo)) << "\" x2=\""
        << fmt(px(xr.hi)) << "\" y2=\"" << fmt(py(xr.hi))
        << "\" stroke=\"#999999\" stroke-dasharray=\"4 3\"/>\n";
  }

  double legend_y = margin_top + 14.0;
  for (const SvgSeries& s : chart.series) {
    if (!s.yerr.empty()) {
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (s.yerr[i] <= 0.0) continue;
        const double gx = px(s.x[i]);
        svg << "<line x1=\"" << fmt(gx) << "\" y1=\"" << fmt(py(s.y[i] - s.yerr[i])) << "\" x2=\""
            << fmt(gx) << "\" y2=\"" << fmt(py(s.y[i] + s.yerr[i])) << "\" stroke=\"" << s.color
            << "\" stroke-width=\"1\"/>\n";
      }
    }
    if (s.line && s.x.size() > 1) {
      svg << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        svg << (i ? " " : "") << fmt(px(s.x[i])) << ',' << fmt(py(s.y[i]));
      }
      svg << "\"/>\n";
    }
    if (s.markers) {
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        svg << "<circle cx=\"" << fmt(px(s.x[i])) << "\" cy=\"" << fmt(py(s.y[i]))
            << "\" r=\"2.5\" fill=\"" << s.color << "\"/>\n";
      }
    }
    if (!s.label.empty()) {
      svg << "<rect x=\"" << fmt(margin_left + plot_w - 130) << "\" y=\"" << fmt(legend_y - 8)
          << "\" width=\"10\" height=\"10\" fill=\"" << s.color << "\"/>\n";
      svg << "<text x=\"" << fmt(margin_left + plot_w - 115) << "\" y=\"" << fmt(legend_y + 1)
          << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape_xml(s.label)
          << "</text>\n";
      legend_y += 16.0;
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

void write_svg(const std::string& path, const SvgChart& chart) {
  write_text_file(path, render_svg(chart));
}

}  // namespace gpc
