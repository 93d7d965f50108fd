#include "propssl/csv.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "propssl/errors.hpp"

namespace propssl::csv {

std::size_t Table::column(const std::string& name, const std::string& file_for_error) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
        throw data_error(file_for_error + ": missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

std::string escape_field(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

Table read(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error(path + ": cannot open file");
    Table table;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (first) {
            table.header = split_fields(line);
            first = false;
        } else if (!line.empty()) {
            table.rows.push_back(split_fields(line));
        }
    }
    if (first) throw data_error(path + ": empty file, expected a header row");
    return table;
}

void write(const std::string& path, const Table& table) {
    std::ofstream out(path);
    if (!out) throw data_error(path + ": cannot open file for writing");
    for (std::size_t j = 0; j < table.header.size(); ++j) {
        if (j) out << ',';
        out << escape_field(table.header[j]);
    }
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (j) out << ',';
            out << escape_field(row[j]);
        }
        out << '\n';
    }
    if (!out) throw data_error(path + ": write failed");
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(const std::string& cell, const std::string& context) {
    if (cell.empty()) throw data_error(context + ": empty numeric cell");
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (errno != 0 || end != cell.c_str() + cell.size())
        throw data_error(context + ": non-numeric value '" + cell + "'");
    return v;
}

std::int64_t parse_int(const std::string& cell, const std::string& context) {
    if (cell.empty()) throw data_error(context + ": empty integer cell");
    errno = 0;
    char* end = nullptr;
    const long long v = std::strtoll(cell.c_str(), &end, 10);
    if (errno != 0 || end != cell.c_str() + cell.size())
        throw data_error(context + ": non-integer value '" + cell + "'");
    return static_cast<std::int64_t>(v);
}

} // namespace propssl::csv
