#pragma once

// CSV tables with a '#'-prefixed metadata block, and a minimal SVG writer.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "rattle/error.hpp"

namespace rattle::io {

inline constexpr const char* kVersion = "0.1.0";

/// Shortest round-trip decimal form; "inf"/"-inf"/"nan" for non-finite values.
inline std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}
inline std::string fmt(long v) { return std::to_string(v); }
inline std::string fmt(int v) { return std::to_string(v); }
inline std::string fmt(std::size_t v) { return std::to_string(v); }
inline std::string fmt(const std::string& v) { return v; }
inline std::string fmt(const char* v) { return v; }

struct CsvTable {
    std::vector<std::pair<std::string, std::string>> meta;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    template <class... Cells>
    void add(const Cells&... cells) {
        rows.push_back({fmt(cells)...});
    }
};

inline std::string to_string(const CsvTable& t) {
    std::ostringstream os;
    os << "# rattle " << kVersion << '\n';
    for (const auto& [k, v] : t.meta) os << "# " << k << " = " << v << '\n';
    for (std::size_t i = 0; i < t.header.size(); ++i) os << (i ? "," : "") << t.header[i];
    os << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
        os << '\n';
    }
    return os.str();
}

/// Writes through a temporary file in the same directory and renames it into place.
inline void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw validation_error("IoError", "cannot open " + tmp.string() + " for writing");
        out << text;
        if (!out) throw numerical_error("IoError", "write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline void write_csv(const std::filesystem::path& path, const CsvTable& t) { write_text(path, to_string(t)); }

/// Reads a CSV written by write_csv (or any headed CSV); '#' lines are skipped.
inline CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw validation_error("IoError", "cannot open " + path.string());
    CsvTable t;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq = line.find(" = ");
            if (eq != std::string::npos && line.size() > 2) t.meta.emplace_back(line.substr(2, eq - 2), line.substr(eq + 3));
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!have_header) {
            t.header = std::move(cells);
            have_header = true;
        } else {
            if (cells.size() != t.header.size())
                throw validation_error("MalformedCsv", path.string() + ": row width differs from header");
            t.rows.push_back(std::move(cells));
        }
    }
    if (!have_header) throw validation_error("MalformedCsv", path.string() + ": no header row");
    return t;
}

inline std::size_t column(const CsvTable& t, const std::string& name) {
    const auto it = std::find(t.header.begin(), t.header.end(), name);
    if (it == t.header.end()) throw validation_error("MalformedCsv", "missing column '" + name + "'");
    return static_cast<std::size_t>(it - t.header.begin());
}

inline double parse_double(const std::string& s) {
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') throw validation_error("MalformedCsv", "not a number: '" + s + "'");
    return v;
}

/// Rounds x to two significant digits, towards +inf (up) or -inf.
inline double round_2sig(double x, bool up = true) {
    if (x == 0.0 || !std::isfinite(x)) return x;
    const double mag = std::pow(10.0, std::floor(std::log10(std::abs(x))) - 1.0);
    return (up ? std::ceil(x / mag - 1e-9) : std::floor(x / mag + 1e-9)) * mag;
}

class Svg {
public:
    Svg(double width, double height) : w_(width), h_(height) {}

    void rect(double x, double y, double w, double h, const std::string& fill) {
        body_ << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(w) << "\" height=\"" << num(h)
              << "\" fill=\"" << fill << "\"/>\n";
    }
    void polygon(const std::vector<std::pair<double, double>>& pts, const std::string& fill,
                 const std::string& stroke = "none") {
        body_ << "<polygon points=\"" << points(pts) << "\" fill=\"" << fill << "\" stroke=\"" << stroke << "\"/>\n";
    }
    void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke, double width = 1.5) {
        body_ << "<polyline points=\"" << points(pts) << "\" fill=\"none\" stroke=\"" << stroke
              << "\" stroke-width=\"" << num(width) << "\"/>\n";
    }
    void line(double x1, double y1, double x2, double y2, const std::string& stroke) {
        body_ << "<line x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(x2) << "\" y2=\"" << num(y2)
              << "\" stroke=\"" << stroke << "\"/>\n";
    }
    void text(double x, double y, const std::string& s, int size = 14) {
        body_ << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" font-family=\"sans-serif\" font-size=\"" << size
              << "\">" << s << "</text>\n";
    }

    std::string str() const {
        std::ostringstream os;
        os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(w_) << "\" height=\"" << num(h_)
           << "\" viewBox=\"0 0 " << num(w_) << ' ' << num(h_) << "\">\n"
           << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
           << body_.str() << "</svg>\n";
        return os.str();
    }

private:
    static std::string num(double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", v);
        return buf;
    }
    static std::string points(const std::vector<std::pair<double, double>>& pts) {
        std::string s;
        for (const auto& [x, y] : pts) {
            if (!s.empty()) s += ' ';
            s += num(x) + "," + num(y);
        }
        return s;
    }

    double w_, h_;
    std::ostringstream body_;
};

struct Series {
    std::string label;
    std::string color;
    std::vector<std::pair<double, double>> points;
};

/// Line plot of one or more series on a fixed canvas; axis ranges rounded to 2 significant digits.
inline std::string line_plot(const std::vector<Series>& series, const std::string& title, double width = 720,
                             double height = 360) {
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const auto& s : series)
        for (const auto& [x, y] : s.points) {
            if (!std::isfinite(x) || !std::isfinite(y)) continue;
            x0 = std::min(x0, x), x1 = std::max(x1, x), y0 = std::min(y0, y), y1 = std::max(y1, y);
        }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    x0 = round_2sig(x0, false), x1 = round_2sig(x1), y0 = round_2sig(y0, false), y1 = round_2sig(y1);
    if (x1 <= x0) x1 = x0 + 1;
    if (y1 <= y0) y1 = y0 + 1;
    const double m = 40;
    Svg svg(width, height);
    auto px = [&](double x) { return m + (x - x0) / (x1 - x0) * (width - 2 * m); };
    auto py = [&](double y) { return height - m - (y - y0) / (y1 - y0) * (height - 2 * m); };
    svg.line(m, height - m, width - m, height - m, "black");
    svg.line(m, m, m, height - m, "black");
    svg.text(m, 24, title);
    svg.text(m, height - 12, fmt(x0), 11);
    svg.text(width - m - 30, height - 12, fmt(x1), 11);
    svg.text(2, height - m, fmt(y0), 11);
    svg.text(2, m, fmt(y1), 11);
    double legend_y = m + 16;
    for (const auto& s : series) {
        std::vector<std::pair<double, double>> pts;
        for (const auto& [x, y] : s.points)
            if (std::isfinite(x) && std::isfinite(y)) pts.emplace_back(px(x), py(y));
        svg.polyline(pts, s.color);
        if (!s.label.empty()) {
            svg.text(width - m - 160, legend_y, s.label, 12);
            svg.line(width - m - 190, legend_y - 4, width - m - 166, legend_y - 4, s.color);
            legend_y += 16;
        }
    }
    return svg.str();
}

} // namespace rattle::io
