#include "shieldmpc/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "shieldmpc/types.hpp"

namespace shieldmpc {
namespace {

constexpr double kW = 640, kH = 420, kL = 70, kR = 150, kT = 40, kB = 50;
const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string f(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

std::ofstream open_svg(const std::string& path, const std::string& title) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kW / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << escape(title) << "</text>\n";
  return out;
}

void axes(std::ofstream& out, double x0, double x1, double y0, double y1,
          const std::string& xl, const std::string& yl) {
  const double pw = kW - kL - kR, ph = kH - kT - kB;
  out << "<rect x=\"" << kL << "\" y=\"" << kT << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = kL + pw * i / 4, fy = kT + ph - ph * i / 4;
    out << "<text x=\"" << f(fx) << "\" y=\"" << f(kT + ph + 16) << "\" text-anchor=\"middle\">"
        << tick(x0 + (x1 - x0) * i / 4) << "</text>\n";
    out << "<text x=\"" << f(kL - 6) << "\" y=\"" << f(fy + 4) << "\" text-anchor=\"end\">"
        << tick(y0 + (y1 - y0) * i / 4) << "</text>\n";
  }
  out << "<text x=\"" << f(kL + pw / 2) << "\" y=\"" << f(kH - 10) << "\" text-anchor=\"middle\">"
      << escape(xl) << "</text>\n";
  out << "<text x=\"16\" y=\"" << f(kT + ph / 2) << "\" transform=\"rotate(-90 16 "
      << f(kT + ph / 2) << ")\" text-anchor=\"middle\">" << escape(yl) << "</text>\n";
}

void legend(std::ofstream& out, const std::vector<PlotSeries>& series) {
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double y = kT + 10 + 18 * i;
    out << "<rect x=\"" << f(kW - kR + 12) << "\" y=\"" << f(y - 9) << "\" width=\"12\" height=\"12\" fill=\""
        << kColors[i % 6] << "\"/>\n<text x=\"" << f(kW - kR + 30) << "\" y=\"" << f(y + 1) << "\">"
        << escape(series[i].label) << "</text>\n";
  }
}

}  // namespace

void write_line_svg(const std::string& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<PlotSeries>& series) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (double v : s.x) if (std::isfinite(v)) { x0 = std::min(x0, v); x1 = std::max(x1, v); }
    for (double v : s.y) if (std::isfinite(v)) { y0 = std::min(y0, v); y1 = std::max(y1, v); }
  }
  if (!std::isfinite(x0)) { x0 = 0; x1 = 1; y0 = 0; y1 = 1; }
  if (x1 <= x0) x1 = x0 + 1;
  if (y1 <= y0) y1 = y0 + 1;
  auto out = open_svg(path, title);
  axes(out, x0, x1, y0, y1, x_label, y_label);
  const double pw = kW - kL - kR, ph = kH - kT - kB;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    out << "<polyline fill=\"none\" stroke-width=\"1.8\" stroke=\"" << kColors[i % 6] << "\" points=\"";
    for (std::size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k) {
      if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
      out << f(kL + pw * (s.x[k] - x0) / (x1 - x0)) << ','
          << f(kT + ph - ph * (s.y[k] - y0) / (y1 - y0)) << ' ';
    }
    out << "\"/>\n";
  }
  legend(out, series);
  out << "</svg>\n";
}

void write_histogram_svg(const std::string& path, const std::string& title,
                         const std::vector<PlotSeries>& series) {
  double y1 = 0.0;
  std::size_t bins = 0;
  for (const auto& s : series) {
    for (double v : s.y) y1 = std::max(y1, v);
    bins = std::max(bins, s.y.size());
  }
  if (y1 <= 0.0) y1 = 1.0;
  auto out = open_svg(path, title);
  axes(out, 0.0, 1.0, 0.0, y1, "normalized ESS", "fraction of steps");
  const double pw = kW - kL - kR, ph = kH - kT - kB;
  if (bins > 0) {
    const double group = pw / bins;
    const double bar = group * 0.8 / std::max<std::size_t>(1, series.size());
    for (std::size_t i = 0; i < series.size(); ++i) {
      for (std::size_t b = 0; b < series[i].y.size(); ++b) {
        const double hgt = ph * series[i].y[b] / y1;
        out << "<rect x=\"" << f(kL + group * b + group * 0.1 + bar * i) << "\" y=\""
            << f(kT + ph - hgt) << "\" width=\"" << f(bar) << "\" height=\"" << f(hgt)
            << "\" fill=\"" << kColors[i % 6] << "\"/>\n";
      }
    }
  }
  legend(out, series);
  out << "</svg>\n";
}

}  // namespace shieldmpc
