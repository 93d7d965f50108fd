#include "propssl/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "propssl/errors.hpp"

namespace propssl::svg {

namespace {

// Series palette (matplotlib's default cycle, which every reader of these
// charts already knows how to tell apart).
const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                          "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
constexpr int kPaletteSize = 8;

constexpr const char* kRed = "#d62728";  // overestimation
constexpr const char* kBlue = "#1f77b4"; // underestimation

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

struct Range {
    double lo = 0.0;
    double hi = 1.0;

    void expand(double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    // Keeps interpolation well-defined when all values coincide.
    void degenerate_guard() {
        if (hi - lo < 1e-12) {
            lo -= 0.5;
            hi += 0.5;
        }
    }
    double frac(double v) const { return (v - lo) / (hi - lo); }
};

void open_document(std::ostringstream& os, int width, int height, const std::string& title) {
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
       << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n"
       << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n"
       << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" "
          "font-family=\"sans-serif\" font-size=\"15\" font-weight=\"bold\">"
       << escape(title) << "</text>\n";
}

} // namespace

std::string escape(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string line_chart(const std::string& title, const std::string& x_label,
                       const std::string& y_label, const std::vector<Series>& series) {
    const int width = 720, height = 420;
    const double left = 64, right = width - 160.0, top = 40, bottom = height - 48.0;

    Range xr{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    Range yr = xr;
    for (const Series& s : series) {
        for (double v : s.x) xr.expand(v);
        for (double v : s.y) yr.expand(v);
    }
    if (!std::isfinite(xr.lo)) xr = {0.0, 1.0};
    if (!std::isfinite(yr.lo)) yr = {0.0, 1.0};
    xr.degenerate_guard();
    yr.degenerate_guard();

    std::ostringstream os;
    open_document(os, width, height, title);

    // Axes, ticks, grid.
    os << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"black\">\n";
    for (int t = 0; t <= 4; ++t) {
        const double fx = t / 4.0;
        const double x = left + fx * (right - left);
        const double y = bottom - fx * (bottom - top);
        os << "<line x1=\"" << num(x) << "\" y1=\"" << num(top) << "\" x2=\"" << num(x)
           << "\" y2=\"" << num(bottom) << "\" stroke=\"#dddddd\"/>\n"
           << "<line x1=\"" << num(left) << "\" y1=\"" << num(y) << "\" x2=\"" << num(right)
           << "\" y2=\"" << num(y) << "\" stroke=\"#dddddd\"/>\n"
           << "<text x=\"" << num(x) << "\" y=\"" << num(bottom + 16)
           << "\" text-anchor=\"middle\">" << num(xr.lo + fx * (xr.hi - xr.lo)) << "</text>\n"
           << "<text x=\"" << num(left - 6) << "\" y=\"" << num(y + 4)
           << "\" text-anchor=\"end\">" << num(yr.lo + fx * (yr.hi - yr.lo)) << "</text>\n";
    }
    os << "<line x1=\"" << num(left) << "\" y1=\"" << num(top) << "\" x2=\"" << num(left)
       << "\" y2=\"" << num(bottom) << "\" stroke=\"black\"/>\n"
       << "<line x1=\"" << num(left) << "\" y1=\"" << num(bottom) << "\" x2=\"" << num(right)
       << "\" y2=\"" << num(bottom) << "\" stroke=\"black\"/>\n"
       << "<text x=\"" << num((left + right) / 2) << "\" y=\"" << num(height - 8.0)
       << "\" text-anchor=\"middle\" font-size=\"12\">" << escape(x_label) << "</text>\n"
       << "<text x=\"16\" y=\"" << num((top + bottom) / 2)
       << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
       << num((top + bottom) / 2) << ")\">" << escape(y_label) << "</text>\n</g>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kPalette[s % kPaletteSize];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < series[s].x.size(); ++i) {
            if (i > 0) os << ' ';
            os << num(left + xr.frac(series[s].x[i]) * (right - left)) << ','
               << num(bottom - yr.frac(series[s].y[i]) * (bottom - top));
        }
        os << "\"/>\n";
        const double ly = top + 16.0 * static_cast<double>(s);
        os << "<rect x=\"" << num(right + 10) << "\" y=\"" << num(ly) << "\" width=\"10\" "
           << "height=\"10\" fill=\"" << color << "\"/>\n"
           << "<text x=\"" << num(right + 24) << "\" y=\"" << num(ly + 9)
           << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape(series[s].label)
           << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

std::string signed_bar_chart(const std::string& title, const std::vector<std::string>& labels,
                             const std::vector<double>& values) {
    if (labels.size() != values.size())
        throw std::invalid_argument("signed_bar_chart: labels/values size mismatch");
    const int width = 640, height = 400;
    const double left = 72, right = width - 24.0, top = 40, bottom = height - 48.0;

    Range yr{0.0, 0.0};
    for (double v : values) yr.expand(v);
    yr.degenerate_guard();
    // A little headroom so bars never touch the frame.
    const double pad = 0.08 * (yr.hi - yr.lo);
    yr.lo -= pad;
    yr.hi += pad;

    std::ostringstream os;
    open_document(os, width, height, title);
    os << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"black\">\n";
    for (int t = 0; t <= 4; ++t) {
        const double fy = t / 4.0;
        const double y = bottom - fy * (bottom - top);
        os << "<line x1=\"" << num(left) << "\" y1=\"" << num(y) << "\" x2=\"" << num(right)
           << "\" y2=\"" << num(y) << "\" stroke=\"#dddddd\"/>\n"
           << "<text x=\"" << num(left - 6) << "\" y=\"" << num(y + 4)
           << "\" text-anchor=\"end\">" << num(yr.lo + fy * (yr.hi - yr.lo)) << "</text>\n";
    }

    const double zero_y = bottom - yr.frac(0.0) * (bottom - top);
    const double slot = (right - left) / static_cast<double>(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double x = left + slot * (static_cast<double>(i) + 0.2);
        const double bar_w = slot * 0.6;
        const double vy = bottom - yr.frac(values[i]) * (bottom - top);
        const double y0 = std::min(vy, zero_y);
        const double h = std::abs(vy - zero_y);
        os << "<rect x=\"" << num(x) << "\" y=\"" << num(y0) << "\" width=\"" << num(bar_w)
           << "\" height=\"" << num(h) << "\" fill=\"" << (values[i] > 0.0 ? kRed : kBlue)
           << "\"/>\n"
           << "<text x=\"" << num(x + bar_w / 2) << "\" y=\"" << num(bottom + 16)
           << "\" text-anchor=\"middle\">" << escape(labels[i]) << "</text>\n";
    }
    os << "<line x1=\"" << num(left) << "\" y1=\"" << num(zero_y) << "\" x2=\"" << num(right)
       << "\" y2=\"" << num(zero_y) << "\" stroke=\"black\"/>\n"
       << "<line x1=\"" << num(left) << "\" y1=\"" << num(top) << "\" x2=\"" << num(left)
       << "\" y2=\"" << num(bottom) << "\" stroke=\"black\"/>\n</g>\n</svg>\n";
    return os.str();
}

std::string table_chart(const std::string& title, const std::vector<std::string>& header,
                        const std::vector<std::vector<std::string>>& rows) {
    const std::size_t cols = header.size();
    std::vector<double> col_w(cols, 0.0);
    for (std::size_t c = 0; c < cols; ++c) col_w[c] = static_cast<double>(header[c].size());
    for (const auto& row : rows) {
        if (row.size() != cols)
            throw std::invalid_argument("table_chart: row width differs from header");
        for (std::size_t c = 0; c < cols; ++c)
            col_w[c] = std::max(col_w[c], static_cast<double>(row[c].size()));
    }
    // ~7.5 px per character of 13-px monospace, plus cell padding.
    for (double& w : col_w) w = w * 7.5 + 16.0;

    const double row_h = 22.0, left = 16.0, top = 40.0;
    double total_w = 0.0;
    for (double w : col_w) total_w += w;
    const int width = static_cast<int>(total_w + 2 * left);
    const int height = static_cast<int>(top + row_h * static_cast<double>(rows.size() + 1) + 24);

    std::ostringstream os;
    open_document(os, width, height, title);
    os << "<g font-family=\"monospace\" font-size=\"13\" fill=\"black\">\n";

    const auto draw_row = [&](const std::vector<std::string>& cells, double y, bool bold) {
        double x = left;
        for (std::size_t c = 0; c < cols; ++c) {
            os << "<text x=\"" << num(x + 8) << "\" y=\"" << num(y + 15) << '"'
               << (bold ? " font-weight=\"bold\"" : "") << '>' << escape(cells[c]) << "</text>\n";
            x += col_w[c];
        }
    };

    draw_row(header, top, true);
    for (std::size_t r = 0; r < rows.size(); ++r)
        draw_row(rows[r], top + row_h * static_cast<double>(r + 1), false);

    // Grid.
    const double table_bottom = top + row_h * static_cast<double>(rows.size() + 1);
    for (std::size_t r = 0; r <= rows.size() + 1; ++r) {
        const double y = top + row_h * static_cast<double>(r);
        os << "<line x1=\"" << num(left) << "\" y1=\"" << num(y) << "\" x2=\""
           << num(left + total_w) << "\" y2=\"" << num(y) << "\" stroke=\""
           << (r <= 1 ? "black" : "#bbbbbb") << "\"/>\n";
    }
    double x = left;
    for (std::size_t c = 0; c <= cols; ++c) {
        os << "<line x1=\"" << num(x) << "\" y1=\"" << num(top) << "\" x2=\"" << num(x)
           << "\" y2=\"" << num(table_bottom) << "\" stroke=\"#bbbbbb\"/>\n";
        if (c < cols) x += col_w[c];
    }
    os << "</g>\n</svg>\n";
    return os.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw data_error(path + ": cannot open for writing");
    os << content;
    if (!os) throw data_error(path + ": write failed");
}

} // namespace propssl::svg
