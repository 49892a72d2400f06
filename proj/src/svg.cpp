#include "diss/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace diss {

namespace {

constexpr double kWidth = 820.0;
constexpr double kHeight = 520.0;
constexpr double kMarginLeft = 80.0;
constexpr double kMarginRight = 170.0;
constexpr double kMarginTop = 40.0;
constexpr double kMarginBottom = 60.0;

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                          "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void include(double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void pad() {
        if (lo == hi) {
            lo -= 1.0;
            hi += 1.0;
        } else {
            const double margin = 0.05 * (hi - lo);
            lo -= margin;
            hi += margin;
        }
    }
};

std::vector<double> ticks(const Range& r, int count) {
    std::vector<double> out;
    const double raw = (r.hi - r.lo) / count;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        if (mag * m >= raw) {
            step = mag * m;
            break;
        }
    }
    const double first = std::ceil(r.lo / step) * step;
    for (double t = first; t <= r.hi + 1e-12; t += step) out.push_back(t);
    return out;
}

}  // namespace

std::string render_line_chart(const std::vector<ChartSeries>& series, const std::string& x_label,
                              const std::string& y_label, const std::string& title) {
    if (series.empty()) throw std::invalid_argument("no series to plot");
    Range xr, yr;
    for (const auto& s : series) {
        if (s.x.empty() || s.x.size() != s.y.size()) {
            throw std::invalid_argument("series '" + s.label + "' has empty or mismatched data");
        }
        if (!s.band.empty() && s.band.size() != s.x.size()) {
            throw std::invalid_argument("series '" + s.label + "' band size mismatch");
        }
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            xr.include(s.x[i]);
            const double b = s.band.empty() ? 0.0 : s.band[i];
            yr.include(s.y[i] - b);
            yr.include(s.y[i] + b);
        }
    }
    xr.pad();
    yr.pad();

    const double plot_w = kWidth - kMarginLeft - kMarginRight;
    const double plot_h = kHeight - kMarginTop - kMarginBottom;
    auto sx = [&](double v) { return kMarginLeft + (v - xr.lo) / (xr.hi - xr.lo) * plot_w; };
    auto sy = [&](double v) { return kMarginTop + (yr.hi - v) / (yr.hi - yr.lo) * plot_h; };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!title.empty()) {
        svg << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
            << "font-family=\"sans-serif\" font-size=\"16\">" << title << "</text>\n";
    }

    for (double t : ticks(xr, 6)) {
        svg << "<line x1=\"" << sx(t) << "\" y1=\"" << kMarginTop << "\" x2=\"" << sx(t)
            << "\" y2=\"" << kMarginTop + plot_h << "\" stroke=\"#eeeeee\"/>\n";
        svg << "<text x=\"" << sx(t) << "\" y=\"" << kMarginTop + plot_h + 18
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(t)
            << "</text>\n";
    }
    for (double t : ticks(yr, 6)) {
        svg << "<line x1=\"" << kMarginLeft << "\" y1=\"" << sy(t) << "\" x2=\""
            << kMarginLeft + plot_w << "\" y2=\"" << sy(t) << "\" stroke=\"#eeeeee\"/>\n";
        svg << "<text x=\"" << kMarginLeft - 8 << "\" y=\"" << sy(t) + 4
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(t)
            << "</text>\n";
    }
    svg << "<rect x=\"" << kMarginLeft << "\" y=\"" << kMarginTop << "\" width=\"" << plot_w
        << "\" height=\"" << plot_h << "\" fill=\"none\" stroke=\"#333333\"/>\n";
    svg << "<text x=\"" << kMarginLeft + plot_w / 2 << "\" y=\"" << kHeight - 16
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << x_label
        << "</text>\n";
    svg << "<text x=\"18\" y=\"" << kMarginTop + plot_h / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
        << "transform=\"rotate(-90 18 " << kMarginTop + plot_h / 2 << ")\">" << y_label
        << "</text>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];

        const bool has_band =
            !s.band.empty() && std::any_of(s.band.begin(), s.band.end(),
                                           [](double b) { return b > 0.0; });
        if (has_band) {
            svg << "<polygon fill=\"" << color << "\" fill-opacity=\"0.15\" stroke=\"none\" "
                << "points=\"";
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                svg << sx(s.x[i]) << "," << sy(s.y[i] + s.band[i]) << " ";
            }
            for (std::size_t i = s.x.size(); i-- > 0;) {
                svg << sx(s.x[i]) << "," << sy(s.y[i] - s.band[i]) << " ";
            }
            svg << "\"/>\n";
        }

        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            svg << sx(s.x[i]) << "," << sy(s.y[i]) << " ";
        }
        svg << "\"/>\n";

        const double ly = kMarginTop + 16.0 + 20.0 * static_cast<double>(si);
        svg << "<line x1=\"" << kWidth - kMarginRight + 12 << "\" y1=\"" << ly << "\" x2=\""
            << kWidth - kMarginRight + 36 << "\" y2=\"" << ly << "\" stroke=\"" << color
            << "\" stroke-width=\"2\"/>\n";
        svg << "<text x=\"" << kWidth - kMarginRight + 42 << "\" y=\"" << ly + 4
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.label << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

void write_line_chart(const std::string& path, const std::vector<ChartSeries>& series,
                      const std::string& x_label, const std::string& y_label,
                      const std::string& title) {
    const std::string content = render_line_chart(series, x_label, y_label, title);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write svg file: " + path);
    out << content;
}

}  // namespace diss
