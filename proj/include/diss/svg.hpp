#pragma once

#include <string>
#include <vector>

namespace diss {

struct ChartSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> band;  // half-width of the shaded band; empty disables it
};

/// Minimal self-contained SVG line chart: one polyline per series, optional
/// +/- band polygon, axes with ticks, legend.
std::string render_line_chart(const std::vector<ChartSeries>& series, const std::string& x_label,
                              const std::string& y_label, const std::string& title = "");

void write_line_chart(const std::string& path, const std::vector<ChartSeries>& series,
                      const std::string& x_label, const std::string& y_label,
                      const std::string& title = "");

}  // namespace diss
