#ifndef QDRIFT_IO_HPP
#define QDRIFT_IO_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace qdrift::io {

/// Shortest round-trip decimal form; identical input gives identical text.
inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (v == 0.0) return "0";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

/// Writes to `path.tmp` and renames over `path`.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw IoError("cannot open '" + tmp.string() + "' for writing");
        os.write(content.data(), static_cast<std::streamsize>(content.size()));
        os.flush();
        if (!os) throw IoError("failed writing '" + tmp.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("cannot move output into '" + path.string() + "'");
    }
}

/// Numeric table with '#'-prefixed metadata lines ahead of the column header.
struct CsvTable {
    std::vector<std::pair<std::string, std::string>> metadata;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    void add_row(std::vector<double> row) {
        if (row.size() != columns.size()) throw ValidationError("CSV row width does not match the header");
        rows.push_back(std::move(row));
    }
};

inline std::string to_csv(const CsvTable& t) {
    std::string out;
    for (const auto& [k, v] : t.metadata) out += "# " + k + ": " + v + "\n";
    for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + t.columns[i];
    out += "\n";
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += format_number(row[i]);
        }
        out += '\n';
    }
    return out;
}

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

struct LineChart {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
    std::string metadata; ///< emitted verbatim (escaped) in a <metadata> element
    int width = 720;
    int height = 480;
};

namespace detail {

inline std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

/// Fixed two-decimal text for pixel coordinates.
inline std::string px(double v) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(2);
    os << v;
    return os.str();
}

inline std::string tick_label(double v) {
    std::ostringstream os;
    os.precision(4);
    os << (std::abs(v) < 1e-12 ? 0.0 : v);
    return os.str();
}

} // namespace detail

/// Static SVG 1.1 line chart: frame, five ticks per axis, legend.
inline std::string to_svg(const LineChart& c) {
    static const char* colours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    bool first = true;
    for (const auto& s : c.series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            if (first) {
                x0 = x1 = s.x[i];
                y0 = y1 = s.y[i];
                first = false;
            }
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, s.y[i]);
            y1 = std::max(y1, s.y[i]);
        }
    if (x1 == x0) x1 = x0 + 1.0;
    if (y1 == y0) y1 = y0 + 1.0;
    const double left = 80, right = c.width - 20.0, top = 40, bottom = c.height - 60.0;
    auto sx = [&](double x) { return left + (x - x0) / (x1 - x0) * (right - left); };
    auto sy = [&](double y) { return bottom - (y - y0) / (y1 - y0) * (bottom - top); };

    std::string o;
    o += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    o += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + std::to_string(c.width) +
         "\" height=\"" + std::to_string(c.height) + "\">\n";
    if (!c.metadata.empty()) o += "<metadata>" + detail::escape_xml(c.metadata) + "</metadata>\n";
    o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o += "<text x=\"" + detail::px(0.5 * (left + right)) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" +
         detail::escape_xml(c.title) + "</text>\n";
    o += "<rect x=\"" + detail::px(left) + "\" y=\"" + detail::px(top) + "\" width=\"" + detail::px(right - left) +
         "\" height=\"" + detail::px(bottom - top) + "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = x0 + (x1 - x0) * i / 4.0, yv = y0 + (y1 - y0) * i / 4.0;
        o += "<line x1=\"" + detail::px(sx(xv)) + "\" y1=\"" + detail::px(bottom) + "\" x2=\"" + detail::px(sx(xv)) +
             "\" y2=\"" + detail::px(bottom + 5) + "\" stroke=\"black\"/>\n";
        o += "<text x=\"" + detail::px(sx(xv)) + "\" y=\"" + detail::px(bottom + 20) +
             "\" text-anchor=\"middle\" font-size=\"11\">" + detail::tick_label(xv) + "</text>\n";
        o += "<line x1=\"" + detail::px(left - 5) + "\" y1=\"" + detail::px(sy(yv)) + "\" x2=\"" + detail::px(left) +
             "\" y2=\"" + detail::px(sy(yv)) + "\" stroke=\"black\"/>\n";
        o += "<text x=\"" + detail::px(left - 8) + "\" y=\"" + detail::px(sy(yv) + 4) +
             "\" text-anchor=\"end\" font-size=\"11\">" + detail::tick_label(yv) + "</text>\n";
    }
    o += "<text x=\"" + detail::px(0.5 * (left + right)) + "\" y=\"" + detail::px(c.height - 15.0) +
         "\" text-anchor=\"middle\" font-size=\"13\">" + detail::escape_xml(c.x_label) + "</text>\n";
    o += "<text x=\"18\" y=\"" + detail::px(0.5 * (top + bottom)) + "\" text-anchor=\"middle\" font-size=\"13\" "
         "transform=\"rotate(-90 18 " + detail::px(0.5 * (top + bottom)) + ")\">" + detail::escape_xml(c.y_label) +
         "</text>\n";
    for (std::size_t k = 0; k < c.series.size(); ++k) {
        const auto& s = c.series[k];
        const std::string colour = colours[k % 6];
        o += "<polyline fill=\"none\" stroke=\"" + colour + "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            o += detail::px(sx(s.x[i])) + "," + detail::px(sy(s.y[i])) + " ";
        }
        o += "\"/>\n";
        const double ly = top + 18.0 + 18.0 * static_cast<double>(k);
        o += "<line x1=\"" + detail::px(right - 170) + "\" y1=\"" + detail::px(ly - 4) + "\" x2=\"" +
             detail::px(right - 145) + "\" y2=\"" + detail::px(ly - 4) + "\" stroke=\"" + colour +
             "\" stroke-width=\"2\"/>\n";
        o += "<text x=\"" + detail::px(right - 140) + "\" y=\"" + detail::px(ly) + "\" font-size=\"12\">" +
             detail::escape_xml(s.name) + "</text>\n";
    }
    o += "</svg>\n";
    return o;
}

} // namespace qdrift::io

#endif // QDRIFT_IO_HPP
