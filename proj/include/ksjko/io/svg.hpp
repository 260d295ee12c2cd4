#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "ksjko/error.hpp"

namespace ksjko::io {

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

/// Minimal line chart: axes, ticks, polylines and a legend.
struct LineChart {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_y = false;
    std::vector<Series> series;
};

namespace detail {

inline std::string short_number(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

inline std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

inline std::vector<double> linear_ticks(double lo, double hi) {
    const double span = hi - lo;
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        if (m * mag >= raw) {
            step = m * mag;
            break;
        }
    }
    std::vector<double> t;
    for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * span; v += step) t.push_back(v);
    return t;
}

}  // namespace detail

inline std::string render_svg(const LineChart& chart) {
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    const double width = 720, height = 450, left = 80, right = 170, top = 40, bottom = 60;
    const double pw = width - left - right, ph = height - top - bottom;

    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    auto ty = [&](double y) { return chart.log_y ? std::log10(y) : y; };
    for (const auto& s : chart.series) {
        for (std::size_t k = 0; k < s.x.size() && k < s.y.size(); ++k) {
            if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k]) || (chart.log_y && !(s.y[k] > 0.0))) continue;
            x0 = std::min(x0, s.x[k]);
            x1 = std::max(x1, s.x[k]);
            y0 = std::min(y0, ty(s.y[k]));
            y1 = std::max(y1, ty(s.y[k]));
        }
    }
    if (!(x1 > x0)) {
        x0 = std::isfinite(x0) ? x0 - 0.5 : 0.0;
        x1 = x0 + 1.0;
    }
    if (!(y1 > y0)) {
        y0 = std::isfinite(y0) ? y0 - 0.5 : 0.0;
        y1 = y0 + 1.0;
    }
    if (chart.log_y) {
        y0 = std::floor(y0);
        y1 = std::ceil(y1);
    }
    auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
    auto py = [&](double y) { return top + (1.0 - (y - y0) / (y1 - y0)) * ph; };

    std::ostringstream o;
    o.precision(6);
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << left + pw / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
      << detail::escape_xml(chart.title) << "</text>\n";
    o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";

    for (double t : detail::linear_ticks(x0, x1)) {
        o << "<line x1=\"" << px(t) << "\" y1=\"" << top + ph << "\" x2=\"" << px(t) << "\" y2=\"" << top + ph + 5
          << "\" stroke=\"black\"/>\n";
        o << "<text x=\"" << px(t) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">"
          << detail::short_number(t) << "</text>\n";
    }
    std::vector<double> yt;
    if (chart.log_y) {
        const double stride = std::max(1.0, std::ceil((y1 - y0) / 8.0));
        for (double e = y0; e <= y1 + 1e-9; e += stride) yt.push_back(e);
    } else {
        yt = detail::linear_ticks(y0, y1);
    }
    for (double t : yt) {
        o << "<line x1=\"" << left - 5 << "\" y1=\"" << py(t) << "\" x2=\"" << left + pw << "\" y2=\"" << py(t)
          << "\" stroke=\"#dddddd\"/>\n";
        const std::string label = chart.log_y ? "1e" + detail::short_number(t) : detail::short_number(t);
        o << "<text x=\"" << left - 8 << "\" y=\"" << py(t) + 4 << "\" text-anchor=\"end\">" << label << "</text>\n";
    }
    o << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 15 << "\" text-anchor=\"middle\">"
      << detail::escape_xml(chart.x_label) << "</text>\n";
    o << "<text transform=\"translate(18," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << detail::escape_xml(chart.y_label) << "</text>\n";

    for (std::size_t k = 0; k < chart.series.size(); ++k) {
        const auto& s = chart.series[k];
        const char* color = palette[k % 10];
        o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || (chart.log_y && !(s.y[i] > 0.0))) continue;
            o << px(s.x[i]) << ',' << py(ty(s.y[i])) << ' ';
        }
        o << "\"/>\n";
        const double ly = top + 14 + 18 * static_cast<double>(k);
        o << "<line x1=\"" << left + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 36 << "\" y2=\"" << ly
          << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        o << "<text x=\"" << left + pw + 42 << "\" y=\"" << ly + 4 << "\">" << detail::escape_xml(s.name)
          << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

inline void write_svg(const std::filesystem::path& path, const LineChart& chart) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot write '" + path.string() + "'");
    out << render_svg(chart);
    if (!out) throw Error(ErrorKind::IoError, "write failed for '" + path.string() + "'");
}

}  // namespace ksjko::io
