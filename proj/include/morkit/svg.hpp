#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "morkit/errors.hpp"

namespace mor {

struct SvgSeries {
    std::string name;
    std::vector<double> x, y;
};

/// Minimal deterministic line plot: linear x, optionally log10 y, fixed
/// palette, legend in the top-right corner. CSV stays the data contract;
/// this is a convenience rendering.
inline void write_svg_lines(const std::string& path, const std::string& title,
                            const std::vector<SvgSeries>& series, bool log_y = true) {
    const double width = 760, height = 520;
    const double lpad = 70, rpad = 20, tpad = 40, bpad = 50;

    double x_lo = 1e300, x_hi = -1e300, y_lo = 1e300, y_hi = -1e300;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            double yv = s.y[i];
            if (log_y) yv = std::log10(std::max(yv, 1e-16));
            x_lo = std::min(x_lo, s.x[i]);
            x_hi = std::max(x_hi, s.x[i]);
            y_lo = std::min(y_lo, yv);
            y_hi = std::max(y_hi, yv);
        }
    if (x_hi <= x_lo) x_hi = x_lo + 1.0;
    if (y_hi <= y_lo) y_hi = y_lo + 1.0;

    auto px = [&](double x) { return lpad + (x - x_lo) / (x_hi - x_lo) * (width - lpad - rpad); };
    auto py = [&](double y) {
        if (log_y) y = std::log10(std::max(y, 1e-16));
        return height - bpad - (y - y_lo) / (y_hi - y_lo) * (height - tpad - bpad);
    };

    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

    std::ofstream out(path);
    if (!out) throw ValidationError("write_svg_lines: cannot open " + path);
    char buf[160];
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"760\" height=\"520\" "
           "viewBox=\"0 0 760 520\">\n";
    out << "<rect width=\"760\" height=\"520\" fill=\"white\"/>\n";
    out << "<text x=\"380\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"16\">" << title << "</text>\n";
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n",
                  lpad, height - bpad, width - rpad, height - bpad);
    out << buf;
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n",
                  lpad, tpad, lpad, height - bpad);
    out << buf;

    for (int tick = 0; tick <= 4; ++tick) {
        const double xv = x_lo + (x_hi - x_lo) * tick / 4.0;
        const double yv = y_lo + (y_hi - y_lo) * tick / 4.0;
        std::snprintf(buf, sizeof(buf),
                      "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\" font-family=\"sans-serif\" "
                      "font-size=\"11\">%.4g</text>\n",
                      px(xv), height - bpad + 18, xv);
        out << buf;
        std::snprintf(buf, sizeof(buf),
                      "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\" font-family=\"sans-serif\" "
                      "font-size=\"11\">%s%.4g</text>\n",
                      lpad - 6, height - bpad - (height - tpad - bpad) * tick / 4.0 + 4,
                      log_y ? "1e" : "", yv);
        out << buf;
    }

    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        out << "<polyline fill=\"none\" stroke=\"" << palette[si % 8]
            << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", px(s.x[i]), py(s.y[i]));
            out << buf;
        }
        out << "\"/>\n";
        std::snprintf(buf, sizeof(buf),
                      "<text x=\"%.1f\" y=\"%.1f\" font-family=\"sans-serif\" font-size=\"12\" "
                      "fill=\"%s\">%s</text>\n",
                      width - rpad - 220.0, tpad + 16.0 * static_cast<double>(si) + 8.0,
                      palette[si % 8], s.name.c_str());
        out << buf;
    }
    out << "</svg>\n";
}

}  // namespace mor
