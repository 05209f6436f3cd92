#include "svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace tsbl::bench {

namespace {

constexpr double kWidth = 640, kHeight = 480;
constexpr double kLeft = 70, kRight = 30, kTop = 40, kBottom = 55;

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

}  // namespace

void write_line_plot(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<PlotSeries>& series) {
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool first = true;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if (first) {
        xmin = xmax = s.x[i];
        ymin = ymax = s.y[i];
        first = false;
      } else {
        xmin = std::min(xmin, s.x[i]);
        xmax = std::max(xmax, s.x[i]);
        ymin = std::min(ymin, s.y[i]);
        ymax = std::max(ymax, s.y[i]);
      }
    }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  ymin = std::min(ymin, 0.0);
  ymax *= 1.05;

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto sx = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * plot_w; };
  auto sy = [&](double y) { return kTop + plot_h - (y - ymin) / (ymax - ymin) * plot_h; };

  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_line_plot: cannot open " + path);

  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kWidth << "' height='"
      << kHeight << "' font-family='sans-serif' font-size='13'>\n";
  out << "<rect width='100%' height='100%' fill='white'/>\n";
  out << "<text x='" << kWidth / 2 << "' y='22' text-anchor='middle' font-size='15'>"
      << title << "</text>\n";

  // frame and ticks
  out << "<rect x='" << kLeft << "' y='" << kTop << "' width='" << plot_w << "' height='"
      << plot_h << "' fill='none' stroke='black'/>\n";
  const int ticks = 5;
  for (int t = 0; t <= ticks; ++t) {
    const double fx = xmin + (xmax - xmin) * t / ticks;
    const double fy = ymin + (ymax - ymin) * t / ticks;
    out << "<line x1='" << sx(fx) << "' y1='" << kTop + plot_h << "' x2='" << sx(fx)
        << "' y2='" << kTop + plot_h + 5 << "' stroke='black'/>\n";
    out << "<text x='" << sx(fx) << "' y='" << kTop + plot_h + 20
        << "' text-anchor='middle'>" << fmt(fx) << "</text>\n";
    out << "<line x1='" << kLeft - 5 << "' y1='" << sy(fy) << "' x2='" << kLeft << "' y2='"
        << sy(fy) << "' stroke='black'/>\n";
    out << "<text x='" << kLeft - 8 << "' y='" << sy(fy) + 4 << "' text-anchor='end'>"
        << fmt(fy) << "</text>\n";
  }
  out << "<text x='" << kLeft + plot_w / 2 << "' y='" << kHeight - 12
      << "' text-anchor='middle'>" << x_label << "</text>\n";
  out << "<text x='16' y='" << kTop + plot_h / 2 << "' text-anchor='middle' transform='rotate(-90 16 "
      << kTop + plot_h / 2 << ")'>" << y_label << "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kColors[si % (sizeof(kColors) / sizeof(kColors[0]))];
    out << "<polyline fill='none' stroke='" << color << "' stroke-width='2' points='";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      out << sx(s.x[i]) << ',' << sy(s.y[i]) << ' ';
    }
    out << "'/>\n";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      out << "<circle cx='" << sx(s.x[i]) << "' cy='" << sy(s.y[i]) << "' r='3' fill='"
          << color << "'/>\n";
    }
    const double ly = kTop + 16 + 18 * static_cast<double>(si);
    out << "<line x1='" << kLeft + plot_w - 130 << "' y1='" << ly << "' x2='"
        << kLeft + plot_w - 106 << "' y2='" << ly << "' stroke='" << color
        << "' stroke-width='2'/>\n";
    out << "<text x='" << kLeft + plot_w - 100 << "' y='" << ly + 4 << "'>" << s.name
        << "</text>\n";
  }
  out << "</svg>\n";
  if (!out) throw std::runtime_error("write_line_plot: write failed for " + path);
}

}  // namespace tsbl::bench
