#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace propssl::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    // Column index by name; throws data_error naming the file and column.
    std::size_t column(const std::string& name, const std::string& file_for_error) const;
};

Table read(const std::string& path);
void write(const std::string& path, const Table& table);

// Shortest-round-trip formatting; identical doubles print identically, so
// rewrites are byte-stable.
std::string format_double(double v);

// Strict numeric parsing; `context` names the file/line/column on error.
double parse_double(const std::string& cell, const std::string& context);
std::int64_t parse_int(const std::string& cell, const std::string& context);

std::vector<std::string> split_fields(const std::string& line);
std::string escape_field(const std::string& field);

} // namespace propssl::csv
