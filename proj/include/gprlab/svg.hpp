/*
 * Copyright 2026 The gprlab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "gprlab/error.hpp"

namespace gprlab::svg {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    /// Optional band; empty or same length as x.
    std::vector<double> lo;
    std::vector<double> hi;
};

struct Chart {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
    int width = 640;
    int height = 400;
};

namespace detail {

inline const char* palette(std::size_t i) {
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
    return colors[i % 6];
}

inline std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

inline std::string num(double v) {
    std::ostringstream ss;
    ss.precision(6);
    ss << v;
    return ss.str();
}

} // namespace detail

/// Line chart with axes, ticks, legend and translucent CI bands.
inline std::string render(const Chart& c) {
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : c.series) {
        if (s.x.size() != s.y.size()) throw DimensionError("svg: series x/y length mismatch");
        if (!s.lo.empty() && (s.lo.size() != s.x.size() || s.hi.size() != s.x.size())) {
            throw DimensionError("svg: band length mismatch");
        }
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, s.lo.empty() ? s.y[i] : s.lo[i]);
            y1 = std::max(y1, s.hi.empty() ? s.y[i] : s.hi[i]);
        }
    }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y0 -= 0.5, y1 += 0.5;
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;

    const double left = 60, right = 150, top = 30, bottom = 45;
    const double pw = c.width - left - right, ph = c.height - top - bottom;
    auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
    auto py = [&](double y) { return top + (1.0 - (y - y0) / (y1 - y0)) * ph; };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << c.width << "\" height=\"" << c.height
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << left + pw / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">"
      << detail::escape(c.title) << "</text>\n";
    o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double xv = x0 + (x1 - x0) * t / 4.0, yv = y0 + (y1 - y0) * t / 4.0;
        o << "<text x=\"" << px(xv) << "\" y=\"" << top + ph + 15 << "\" text-anchor=\"middle\">" << detail::num(xv)
          << "</text>\n";
        o << "<text x=\"" << left - 5 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << detail::num(yv)
          << "</text>\n";
        o << "<line x1=\"" << left << "\" x2=\"" << left + pw << "\" y1=\"" << py(yv) << "\" y2=\"" << py(yv)
          << "\" stroke=\"#ddd\"/>\n";
    }
    if (y0 < 0 && y1 > 0) {
        o << "<line x1=\"" << left << "\" x2=\"" << left + pw << "\" y1=\"" << py(0) << "\" y2=\"" << py(0)
          << "\" stroke=\"#888\" stroke-dasharray=\"4 3\"/>\n";
    }
    o << "<text x=\"" << left + pw / 2 << "\" y=\"" << c.height - 8 << "\" text-anchor=\"middle\">"
      << detail::escape(c.x_label) << "</text>\n";
    o << "<text transform=\"translate(14," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << detail::escape(c.y_label) << "</text>\n";

    for (std::size_t si = 0; si < c.series.size(); ++si) {
        const auto& s = c.series[si];
        const char* col = detail::palette(si);
        if (!s.lo.empty() && !s.x.empty()) {
            o << "<polygon fill=\"" << col << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
            for (std::size_t i = 0; i < s.x.size(); ++i) o << px(s.x[i]) << ',' << py(s.hi[i]) << ' ';
            for (std::size_t i = s.x.size(); i-- > 0;) o << px(s.x[i]) << ',' << py(s.lo[i]) << ' ';
            o << "\"/>\n";
        }
        o << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.8\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) o << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
        o << "\"/>\n";
        const double ly = top + 12 + 16.0 * static_cast<double>(si);
        o << "<line x1=\"" << left + pw + 10 << "\" x2=\"" << left + pw + 30 << "\" y1=\"" << ly << "\" y2=\"" << ly
          << "\" stroke=\"" << col << "\" stroke-width=\"2\"/>\n";
        o << "<text x=\"" << left + pw + 35 << "\" y=\"" << ly + 4 << "\">" << detail::escape(s.label) << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

} // namespace gprlab::svg
