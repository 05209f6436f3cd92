#pragma once

#include <string>
#include <vector>

// Minimal static line-plot writer used by the benchmark reports.

namespace tsbl::bench {

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

void write_line_plot(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<PlotSeries>& series);

}  // namespace tsbl::bench
