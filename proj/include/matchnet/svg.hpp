#ifndef MATCHNET_SVG_HPP
#define MATCHNET_SVG_HPP

// Minimal SVG output: line charts, box plots and bar histograms. Enough to eyeball
// experiment output without a plotting stack; the CSV/JSON files stay authoritative.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "matchnet/engine.hpp"

namespace matchnet::svg {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

namespace detail {

inline constexpr double width = 640.0;
inline constexpr double height = 360.0;
inline constexpr double margin = 48.0;
inline const char* const palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

inline std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string label_num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

inline std::string escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '<':
            out += "&lt;";
            break;
        case '>':
            out += "&gt;";
            break;
        case '&':
            out += "&amp;";
            break;
        default:
            out += c;
        }
    }
    return out;
}

struct Frame {
    double x0, x1, y0, y1;

    double px(double x) const { return margin + (x - x0) / (x1 - x0) * (width - 2 * margin); }
    double py(double y) const { return height - margin - (y - y0) / (y1 - y0) * (height - 2 * margin); }
};

inline Frame make_frame(double x0, double x1, double y0, double y1)
{
    if (!(x1 > x0)) {
        x1 = x0 + 1.0;
    }
    if (!(y1 > y0)) {
        y1 = y0 + 1.0;
    }
    return Frame{x0, x1, y0, y1};
}

inline std::string open(const std::string& title)
{
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" + num(height) +
           "\" font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
           "<text x=\"" + num(width / 2) + "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">" + escape(title) +
           "</text>\n";
}

inline std::string axes(const Frame& f)
{
    std::string s = "<g stroke=\"black\" fill=\"none\"><path d=\"M" + num(margin) + " " + num(margin) + " V" +
                    num(height - margin) + " H" + num(width - margin) + "\"/></g>\n";
    s += "<text x=\"" + num(margin) + "\" y=\"" + num(height - margin + 14) + "\" text-anchor=\"middle\">" +
         label_num(f.x0) + "</text>\n";
    s += "<text x=\"" + num(width - margin) + "\" y=\"" + num(height - margin + 14) + "\" text-anchor=\"middle\">" +
         label_num(f.x1) + "</text>\n";
    s += "<text x=\"" + num(margin - 4) + "\" y=\"" + num(height - margin) + "\" text-anchor=\"end\">" +
         label_num(f.y0) + "</text>\n";
    s += "<text x=\"" + num(margin - 4) + "\" y=\"" + num(margin + 4) + "\" text-anchor=\"end\">" + label_num(f.y1) +
         "</text>\n";
    return s;
}

}  // namespace detail

/// Step-style line chart of several series on shared axes.
inline std::string line_chart(const std::string& title, const std::vector<Series>& series)
{
    using namespace detail;
    double x0 = 0, x1 = 0, y0 = 0, y1 = 0;
    bool first = true;
    for (const auto& s : series) {
        for (std::size_t k = 0; k < s.x.size(); ++k) {
            if (first) {
                x0 = x1 = s.x[k];
                y0 = y1 = s.y[k];
                first = false;
            }
            x0 = std::min(x0, s.x[k]);
            x1 = std::max(x1, s.x[k]);
            y0 = std::min(y0, s.y[k]);
            y1 = std::max(y1, s.y[k]);
        }
    }
    const Frame f = make_frame(x0, x1, std::min(0.0, y0), y1);
    std::string out = open(title) + axes(f);
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* color = palette[k % std::size(palette)];
        if (!s.x.empty()) {
            std::string d = "M" + num(f.px(s.x[0])) + " " + num(f.py(s.y[0]));
            for (std::size_t p = 1; p < s.x.size(); ++p) {
                d += " H" + num(f.px(s.x[p])) + " V" + num(f.py(s.y[p]));
            }
            out += "<path fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.2\" d=\"" + d + "\"/>\n";
        }
        out += "<text x=\"" + num(width - margin + 4 - 120) + "\" y=\"" + num(margin + 14.0 * static_cast<double>(k)) +
               "\" fill=\"" + color + "\">" + escape(s.label) + "</text>\n";
    }
    return out + "</svg>\n";
}

/// One box (whiskers at min/max) per labelled five-number summary.
inline std::string box_plot(const std::string& title, const std::vector<std::pair<std::string, FiveNumber>>& boxes)
{
    using namespace detail;
    double y1 = 0.0;
    for (const auto& [label, b] : boxes) {
        y1 = std::max(y1, b.max);
    }
    const Frame f = make_frame(0.0, static_cast<double>(boxes.size()), 0.0, y1);
    std::string out = open(title) + axes(f);
    for (std::size_t k = 0; k < boxes.size(); ++k) {
        const auto& [label, b] = boxes[k];
        const double cx = f.px(static_cast<double>(k) + 0.5);
        const double half = 0.15 * (width - 2 * margin) / static_cast<double>(boxes.size());
        const char* color = palette[k % std::size(palette)];
        out += "<g stroke=\"" + std::string(color) + "\" fill=\"none\">";
        out += "<path d=\"M" + num(cx) + " " + num(f.py(b.min)) + " V" + num(f.py(b.q1)) + " M" + num(cx) + " " +
               num(f.py(b.q3)) + " V" + num(f.py(b.max)) + "\"/>";
        out += "<rect x=\"" + num(cx - half) + "\" y=\"" + num(f.py(b.q3)) + "\" width=\"" + num(2 * half) +
               "\" height=\"" + num(f.py(b.q1) - f.py(b.q3)) + "\"/>";
        out += "<path stroke-width=\"2\" d=\"M" + num(cx - half) + " " + num(f.py(b.median)) + " H" + num(cx + half) +
               "\"/></g>\n";
        out += "<text x=\"" + num(cx) + "\" y=\"" + num(height - margin + 28) + "\" text-anchor=\"middle\">" +
               escape(label) + "</text>\n";
    }
    return out + "</svg>\n";
}

/// Unit-width bars for counts[k] at k, plus labelled vertical reference lines.
inline std::string histogram(const std::string& title, const std::vector<std::size_t>& counts,
                             const std::vector<std::pair<std::string, double>>& markers = {})
{
    using namespace detail;
    double x1 = static_cast<double>(counts.size());
    for (const auto& [label, v] : markers) {
        if (std::isfinite(v)) {
            x1 = std::max(x1, v + 1.0);
        }
    }
    double y1 = 0.0;
    for (auto c : counts) {
        y1 = std::max(y1, static_cast<double>(c));
    }
    const Frame f = make_frame(0.0, x1, 0.0, y1);
    std::string out = open(title) + axes(f);
    for (std::size_t k = 0; k < counts.size(); ++k) {
        if (counts[k] == 0) {
            continue;
        }
        const double left = f.px(static_cast<double>(k));
        const double right = f.px(static_cast<double>(k) + 1.0);
        const double top = f.py(static_cast<double>(counts[k]));
        out += "<rect fill=\"#9ecae1\" stroke=\"#3182bd\" x=\"" + num(left) + "\" y=\"" + num(top) + "\" width=\"" +
               num(right - left) + "\" height=\"" + num(f.py(0.0) - top) + "\"/>\n";
    }
    for (std::size_t k = 0; k < markers.size(); ++k) {
        const auto& [label, v] = markers[k];
        if (!std::isfinite(v)) {
            continue;
        }
        const double x = f.px(v);
        const char* color = palette[(k + 1) % std::size(palette)];
        out += "<path stroke=\"" + std::string(color) + "\" stroke-dasharray=\"4 3\" d=\"M" + num(x) + " " +
               num(margin) + " V" + num(height - margin) + "\"/>\n";
        out += "<text x=\"" + num(x + 3) + "\" y=\"" + num(margin + 12.0 * static_cast<double>(k + 1)) + "\" fill=\"" +
               color + "\">" + escape(label) + "</text>\n";
    }
    return out + "</svg>\n";
}

}  // namespace matchnet::svg

#endif  // MATCHNET_SVG_HPP
