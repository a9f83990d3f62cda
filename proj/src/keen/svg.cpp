#include "keen/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace keen {

namespace {

constexpr int kW = 840, kH = 560;
constexpr int kL = 70, kR = 20, kT = 40, kB = 50;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.6g", v);
  return b;
}

}  // namespace

std::string svg_line_chart(const std::vector<SvgSeries>& series,
                           const std::string& title,
                           const std::string& x_label,
                           const std::string& y_label, bool log_y) {
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  auto ty = [&](double y) { return log_y ? std::log10(std::abs(y) + 1e-300) : y; };
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, ty(s.y[i]));
      ymax = std::max(ymax, ty(s.y[i]));
    }
  if (!(xmax > xmin)) xmax = xmin + 1;
  if (!(ymax > ymin)) ymax = ymin + 1;
  auto px = [&](double x) {
    return kL + (x - xmin) / (xmax - xmin) * (kW - kL - kR);
  };
  auto py = [&](double y) {
    return kH - kB - (ty(y) - ymin) / (ymax - ymin) * (kH - kT - kB);
  };
  std::ostringstream os;
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kW
     << "' height='" << kH << "' viewBox='0 0 " << kW << " " << kH << "'>\n"
     << "<rect width='100%' height='100%' fill='white'/>\n"
     << "<text x='" << kW / 2 << "' y='24' text-anchor='middle' "
        "font-family='sans-serif' font-size='16'>" << title << "</text>\n";
  // Axes and ticks.
  os << "<line x1='" << kL << "' y1='" << kH - kB << "' x2='" << kW - kR
     << "' y2='" << kH - kB << "' stroke='black'/>\n"
     << "<line x1='" << kL << "' y1='" << kT << "' x2='" << kL << "' y2='"
     << kH - kB << "' stroke='black'/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double xv = xmin + (xmax - xmin) * k / 5.0;
    const double yv = ymin + (ymax - ymin) * k / 5.0;
    os << "<text x='" << px(xv) << "' y='" << kH - kB + 18
       << "' text-anchor='middle' font-family='sans-serif' font-size='11'>"
       << fmt(xv) << "</text>\n";
    os << "<text x='" << kL - 6 << "' y='" << kH - kB - (kH - kT - kB) * k / 5.0 + 4
       << "' text-anchor='end' font-family='sans-serif' font-size='11'>"
       << (log_y ? "1e" + fmt(yv) : fmt(yv)) << "</text>\n";
  }
  os << "<text x='" << (kL + kW - kR) / 2 << "' y='" << kH - 12
     << "' text-anchor='middle' font-family='sans-serif' font-size='13'>"
     << x_label << "</text>\n"
     << "<text x='16' y='" << (kT + kH - kB) / 2
     << "' text-anchor='middle' font-family='sans-serif' font-size='13' "
        "transform='rotate(-90 16 " << (kT + kH - kB) / 2 << ")'>" << y_label
     << "</text>\n";
  int ci = 0;
  for (const auto& s : series) {
    const char* color = kPalette[ci % 8];
    os << "<polyline fill='none' stroke='" << color << "' stroke-width='1.5' "
          "points='";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      os << fmt(px(s.x[i])) << "," << fmt(py(s.y[i])) << " ";
    os << "'/>\n";
    os << "<text x='" << kW - kR - 6 << "' y='" << kT + 16 + 16 * ci
       << "' text-anchor='end' font-family='sans-serif' font-size='12' "
          "fill='" << color << "'>" << s.label << "</text>\n";
    ++ci;
  }
  os << "</svg>\n";
  return os.str();
}

std::string svg_regime_map(const RegimeGrid& grid, const std::string& title) {
  const double s_lo = grid.s_values.front(), s_hi = grid.s_values.back();
  const double v_lo = grid.v_values.front(), v_hi = grid.v_values.back();
  auto px = [&](double s) {
    return kL + (s - s_lo) / (s_hi - s_lo) * (kW - kL - kR);
  };
  auto py = [&](double v) {
    return kH - kB - (v - v_lo) / (v_hi - v_lo) * (kH - kT - kB);
  };
  const double cw = (kW - kL - kR) / static_cast<double>(grid.ns - 1);
  const double ch = (kH - kT - kB) / static_cast<double>(grid.nv - 1);
  std::ostringstream os;
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kW
     << "' height='" << kH << "' viewBox='0 0 " << kW << " " << kH << "'>\n"
     << "<rect width='100%' height='100%' fill='white'/>\n"
     << "<text x='" << kW / 2 << "' y='24' text-anchor='middle' "
        "font-family='sans-serif' font-size='16'>" << title << "</text>\n";
  for (const GridRecord& r : grid.records) {
    const char* fill = "#bbbbbb";
    if (r.ok) {
      if (r.regime == "StableGrowth")
        fill = "#9ecae1";
      else if (r.regime == "DeferredCollapse")
        fill = "#eeeeee";
      else if (r.regime == "ImmediateCollapse")
        fill = "#636363";
      else
        fill = "#fdd0a2";
    }
    os << "<rect x='" << fmt(px(r.s) - cw / 2) << "' y='"
       << fmt(py(r.v) - ch / 2) << "' width='" << fmt(cw) << "' height='"
       << fmt(ch) << "' fill='" << fill << "'/>\n";
    if (r.ok && r.border_stability)
      os << "<circle cx='" << fmt(px(r.s)) << "' cy='" << fmt(py(r.v))
         << "' r='2' fill='#d62728'/>\n";
  }
  os << "<line x1='" << kL << "' y1='" << kH - kB << "' x2='" << kW - kR
     << "' y2='" << kH - kB << "' stroke='black'/>\n"
     << "<line x1='" << kL << "' y1='" << kT << "' x2='" << kL << "' y2='"
     << kH - kB << "' stroke='black'/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double sv = s_lo + (s_hi - s_lo) * k / 5.0;
    const double vv = v_lo + (v_hi - v_lo) * k / 5.0;
    os << "<text x='" << fmt(px(sv)) << "' y='" << kH - kB + 18
       << "' text-anchor='middle' font-family='sans-serif' font-size='11'>"
       << fmt(sv) << "</text>\n"
       << "<text x='" << kL - 6 << "' y='" << fmt(py(vv) + 4)
       << "' text-anchor='end' font-family='sans-serif' font-size='11'>"
       << fmt(vv) << "</text>\n";
  }
  os << "<text x='" << (kL + kW - kR) / 2 << "' y='" << kH - 12
     << "' text-anchor='middle' font-family='sans-serif' font-size='13'>s"
        "</text>\n"
     << "<text x='16' y='" << (kT + kH - kB) / 2
     << "' text-anchor='middle' font-family='sans-serif' font-size='13' "
        "transform='rotate(-90 16 " << (kT + kH - kB) / 2 << ")'>v</text>\n"
     << "</svg>\n";
  return os.str();
}

}  // namespace keen
