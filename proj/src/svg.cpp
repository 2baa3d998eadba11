#include "einode/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "einode/errors.hpp"

namespace einode {
namespace {

constexpr std::array<const char*, 8> kColors = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
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

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!(lo <= hi)) {
      lo = 0.0;
      hi = 1.0;
    }
    if (hi - lo < 1e-300) {
      const double pad = std::max(std::abs(lo) * 0.05, 0.5);
      lo -= pad;
      hi += pad;
    }
  }
};

void panel_svg(std::ostringstream& out, const PlotPanel& panel, double top, double width,
               double height) {
  const double left = 70.0, right = 170.0, head = 26.0, foot = 34.0;
  const double pw = width - left - right;
  const double ph = height - head - foot;
  auto usable = [&](double y) { return std::isfinite(y) && (!panel.log_y || y > 0.0); };
  auto ty = [&](double y) { return panel.log_y ? std::log10(y) : y; };

  Range rx, ry;
  for (const auto& s : panel.series)
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i)
      if (std::isfinite(s.x[i]) && usable(s.y[i])) {
        rx.add(s.x[i]);
        ry.add(ty(s.y[i]));
      }
  if (usable(panel.reference_y)) ry.add(ty(panel.reference_y));
  rx.finish();
  ry.finish();
  auto px = [&](double x) { return left + (x - rx.lo) / (rx.hi - rx.lo) * pw; };
  auto py = [&](double y) { return top + head + (1.0 - (ty(y) - ry.lo) / (ry.hi - ry.lo)) * ph; };

  out << "<text x=\"" << fmt(left) << "\" y=\"" << fmt(top + 17) << "\" font-size=\"14\">"
      << escape(panel.title) << "</text>\n";
  out << "<rect x=\"" << fmt(left) << "\" y=\"" << fmt(top + head) << "\" width=\"" << fmt(pw)
      << "\" height=\"" << fmt(ph) << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double fx = rx.lo + (rx.hi - rx.lo) * k / 4.0;
    const double gx = left + pw * k / 4.0;
    out << "<text x=\"" << fmt(gx) << "\" y=\"" << fmt(top + head + ph + 14)
        << "\" font-size=\"10\" text-anchor=\"middle\">" << fmt(fx) << "</text>\n";
    const double fy = ry.lo + (ry.hi - ry.lo) * k / 4.0;
    const double gy = top + head + ph * (1.0 - k / 4.0);
    out << "<text x=\"" << fmt(left - 4) << "\" y=\"" << fmt(gy + 3)
        << "\" font-size=\"10\" text-anchor=\"end\">" << fmt(panel.log_y ? std::pow(10.0, fy) : fy)
        << "</text>\n";
    out << "<line x1=\"" << fmt(left) << "\" x2=\"" << fmt(left + pw) << "\" y1=\"" << fmt(gy)
        << "\" y2=\"" << fmt(gy) << "\" stroke=\"#ddd\"/>\n";
  }
  out << "<text x=\"" << fmt(left + pw / 2) << "\" y=\"" << fmt(top + height - 4)
      << "\" font-size=\"11\" text-anchor=\"middle\">" << escape(panel.x_label) << "</text>\n";
  out << "<text x=\"14\" y=\"" << fmt(top + head + ph / 2) << "\" font-size=\"11\" "
      << "text-anchor=\"middle\" transform=\"rotate(-90 14 " << fmt(top + head + ph / 2) << ")\">"
      << escape(panel.y_label) << "</text>\n";
  if (usable(panel.reference_y))
    out << "<line x1=\"" << fmt(left) << "\" x2=\"" << fmt(left + pw) << "\" y1=\""
        << fmt(py(panel.reference_y)) << "\" y2=\"" << fmt(py(panel.reference_y))
        << "\" stroke=\"#888\" stroke-dasharray=\"2,3\"/>\n";

  for (std::size_t si = 0; si < panel.series.size(); ++si) {
    const auto& s = panel.series[si];
    const char* color = kColors[si % kColors.size()];
    std::string points;
    auto flush = [&] {
      if (points.empty()) return;
      out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.3\""
          << (s.dashed ? " stroke-dasharray=\"6,3\"" : "") << " points=\"" << points << "\"/>\n";
      points.clear();
    };
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !usable(s.y[i])) {
        flush();
        continue;
      }
      points += fmt(px(s.x[i])) + "," + fmt(py(s.y[i])) + " ";
    }
    flush();
    const double ly = top + head + 12 + 16.0 * static_cast<double>(si);
    out << "<line x1=\"" << fmt(left + pw + 10) << "\" x2=\"" << fmt(left + pw + 30) << "\" y1=\""
        << fmt(ly - 4) << "\" y2=\"" << fmt(ly - 4) << "\" stroke=\"" << color << "\""
        << (s.dashed ? " stroke-dasharray=\"6,3\"" : "") << "/>\n";
    out << "<text x=\"" << fmt(left + pw + 34) << "\" y=\"" << fmt(ly) << "\" font-size=\"10\">"
        << escape(s.label) << "</text>\n";
  }
}

}  // namespace

std::string render_svg(const std::vector<PlotPanel>& panels, double width, double panel_height) {
  std::ostringstream out;
  const double height = panel_height * static_cast<double>(std::max<std::size_t>(panels.size(), 1));
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width) << "\" height=\""
      << fmt(height) << "\" font-family=\"sans-serif\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t i = 0; i < panels.size(); ++i)
    panel_svg(out, panels[i], panel_height * static_cast<double>(i), width, panel_height);
  out << "</svg>\n";
  return out.str();
}

void write_svg(const std::string& path, const std::vector<PlotPanel>& panels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << render_svg(panels);
}

}  // namespace einode
