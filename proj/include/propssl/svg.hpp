#pragma once

#include <string>
#include <vector>

namespace propssl::svg {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

// Multi-series line chart with axes, tick labels, and a legend. Returns a
// complete standalone SVG document.
std::string line_chart(const std::string& title, const std::string& x_label,
                       const std::string& y_label, const std::vector<Series>& series);

// One bar per label; positive values red (overestimation), negative blue
// (underestimation), with a zero baseline.
std::string signed_bar_chart(const std::string& title, const std::vector<std::string>& labels,
                             const std::vector<double>& values);

// Text table with a header row and grid lines.
std::string table_chart(const std::string& title, const std::vector<std::string>& header,
                        const std::vector<std::vector<std::string>>& rows);

void write_file(const std::string& path, const std::string& content);

// XML text escaping for element content and attribute values.
std::string escape(const std::string& text);

} // namespace propssl::svg
