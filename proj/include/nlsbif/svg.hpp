#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "nlsbif/error.hpp"

namespace nlsbif {

struct SvgSeries {
  std::string name;
  std::vector<double> x, y;
  bool dashed = false;
};

/// Minimal line chart: linear or log axes, a legend, nothing else. Output
/// depends only on the data, so identical runs give identical files.
struct SvgPlot {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  bool logx = false;
  bool logy = false;
  std::vector<SvgSeries> series;
  /// Horizontal reference line, e.g. lambda = 0.
  std::optional<double> hline;

  void add(std::string name, std::vector<double> x, std::vector<double> y, bool dashed = false) {
    series.push_back({std::move(name), std::move(x), std::move(y), dashed});
  }

  void write(std::ostream& os) const {
    constexpr double W = 640, H = 420, ml = 84, mr = 160, mt = 40, mb = 50;
    const double pw = W - ml - mr, ph = H - mt - mb;
    auto tx = [&](double v) { return logx ? std::log10(v) : v; };
    auto ty = [&](double v) { return logy ? std::log10(v) : v; };
    auto usable = [&](double x, double y) {
      return std::isfinite(x) && std::isfinite(y) && (!logx || x > 0.0) && (!logy || y > 0.0);
    };
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series)
      for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
        if (!usable(s.x[i], s.y[i])) continue;
        x0 = std::min(x0, tx(s.x[i]));
        x1 = std::max(x1, tx(s.x[i]));
        y0 = std::min(y0, ty(s.y[i]));
        y1 = std::max(y1, ty(s.y[i]));
      }
    if (hline && (!logy || *hline > 0.0)) {
      y0 = std::min(y0, ty(*hline));
      y1 = std::max(y1, ty(*hline));
    }
    if (!std::isfinite(x0)) x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
    if (x1 == x0) x0 -= 0.5, x1 += 0.5;
    if (y1 == y0) y0 -= 0.5, y1 += 0.5;
    const double pad = 0.04 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    auto px = [&](double v) { return ml + (tx(v) - x0) / (x1 - x0) * pw; };
    auto py = [&](double v) { return mt + ph - (ty(v) - y0) / (y1 - y0) * ph; };

    static const char* colors[] = {"#1f4e9c", "#c0392b", "#1e8449", "#7d3c98", "#b9770e", "#117a65", "#555555"};
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << ml + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << esc(title) << "</text>\n";
    os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
      const double fx = x0 + (x1 - x0) * k / 4.0, fy = y0 + (y1 - y0) * k / 4.0;
      const double sx = ml + pw * k / 4.0, sy = mt + ph - ph * k / 4.0;
      os << "<line x1=\"" << sx << "\" y1=\"" << mt + ph << "\" x2=\"" << sx << "\" y2=\"" << mt + ph + 5 << "\" stroke=\"black\"/>\n";
      os << "<text x=\"" << sx << "\" y=\"" << mt + ph + 18 << "\" text-anchor=\"middle\">" << tick(fx, logx, x1 - x0) << "</text>\n";
      os << "<line x1=\"" << ml - 5 << "\" y1=\"" << sy << "\" x2=\"" << ml << "\" y2=\"" << sy << "\" stroke=\"black\"/>\n";
      os << "<text x=\"" << ml - 8 << "\" y=\"" << sy + 4 << "\" text-anchor=\"end\">" << tick(fy, logy, y1 - y0) << "</text>\n";
    }
    os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">" << esc(xlabel) << "</text>\n";
    os << "<text x=\"14\" y=\"" << mt + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 " << mt + ph / 2
       << ")\">" << esc(ylabel) << "</text>\n";
    if (hline && (!logy || *hline > 0.0))
      os << "<line x1=\"" << ml << "\" y1=\"" << py(*hline) << "\" x2=\"" << ml + pw << "\" y2=\"" << py(*hline)
         << "\" stroke=\"#999999\" stroke-dasharray=\"2,3\"/>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
      const auto& s = series[k];
      const char* col = colors[k % 7];
      os << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\"";
      if (s.dashed) os << " stroke-dasharray=\"6,4\"";
      os << " points=\"";
      bool first = true;
      for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
        if (!usable(s.x[i], s.y[i])) continue;
        os << (first ? "" : " ") << fmt(px(s.x[i])) << "," << fmt(py(s.y[i]));
        first = false;
      }
      os << "\"/>\n";
      const double ly = mt + 14 + 18.0 * k;
      os << "<line x1=\"" << ml + pw + 10 << "\" y1=\"" << ly << "\" x2=\"" << ml + pw + 34 << "\" y2=\"" << ly
         << "\" stroke=\"" << col << "\" stroke-width=\"2\"" << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << "/>\n";
      os << "<text x=\"" << ml + pw + 40 << "\" y=\"" << ly + 4 << "\">" << esc(s.name) << "</text>\n";
    }
    os << "</svg>\n";
  }

 private:
  static std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
  }
  static std::string tick(double v, bool log, double span) {
    char buf[32];
    if (log)
      std::snprintf(buf, sizeof buf, "%.3g", std::pow(10.0, v));
    else
      std::snprintf(buf, sizeof buf, "%.4g", std::abs(v) < 1e-9 * span ? 0.0 : v);
    return buf;
  }
  static std::string esc(const std::string& s) {
    std::string o;
    for (char c : s) {
      if (c == '<') o += "&lt;";
      else if (c == '>') o += "&gt;";
      else if (c == '&') o += "&amp;";
      else o += c;
    }
    return o;
  }
};

}  // namespace nlsbif
