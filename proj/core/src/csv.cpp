#include "rctlab/csv.hpp"

#include "rctlab/error.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <system_error>

namespace rctlab::csv {

namespace {

std::vector<std::string> split(std::string_view line) {
    std::vector<std::string> out;
    std::size_t begin = 0;
    while (true) {
        auto end = line.find(',', begin);
        auto field = line.substr(begin, end == std::string_view::npos ? std::string_view::npos
                                                                       : end - begin);
        while (!field.empty() && (field.front() == ' ' || field.front() == '\t'))
            field.remove_prefix(1);
        while (!field.empty() && (field.back() == ' ' || field.back() == '\t'))
            field.remove_suffix(1);
        out.emplace_back(field);
        if (end == std::string_view::npos)
            break;
        begin = end + 1;
    }
    return out;
}

std::string where(const std::string& source, std::size_t line) {
    return source + ":" + std::to_string(line);
}

} // namespace

std::size_t Table::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name)
            return i;
    throw ConfigError(source + ": missing column '" + std::string(name) + "'");
}

double Table::number(const Row& row, std::size_t col) const {
    const auto& field = text(row, col);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size() || field.empty())
        throw ConfigError(where(source, row.line) + ": '" + field + "' is not a number in column '" +
                          header[col] + "'");
    return value;
}

long long Table::integer(const Row& row, std::size_t col) const {
    const auto& field = text(row, col);
    long long value = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size() || field.empty())
        throw ConfigError(where(source, row.line) + ": '" + field +
                          "' is not an integer in column '" + header[col] + "'");
    return value;
}

const std::string& Table::text(const Row& row, std::size_t col) const {
    if (col >= row.fields.size())
        throw ConfigError(where(source, row.line) + ": row has " +
                          std::to_string(row.fields.size()) + " fields, expected " +
                          std::to_string(header.size()));
    return row.fields[col];
}

Table parse(std::istream& in, std::string source, const std::vector<std::string>& expected_header) {
    Table table;
    table.source = std::move(source);
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#')
            continue;
        auto fields = split(line);
        if (!have_header) {
            table.header = std::move(fields);
            have_header = true;
            if (!expected_header.empty() && table.header != expected_header) {
                std::string want;
                for (const auto& h : expected_header)
                    want += (want.empty() ? "" : ",") + h;
                throw ConfigError(where(table.source, line_no) + ": expected header '" + want + "'");
            }
            continue;
        }
        if (fields.size() != table.header.size())
            throw ConfigError(where(table.source, line_no) + ": row has " +
                              std::to_string(fields.size()) + " fields, expected " +
                              std::to_string(table.header.size()));
        table.rows.push_back({line_no, std::move(fields)});
    }
    if (!have_header)
        throw ConfigError(table.source + ": empty file");
    return table;
}

Table read_file(const std::filesystem::path& path, const std::vector<std::string>& expected_header) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path.string());
    return parse(in, path.string(), expected_header);
}

std::string format_number(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc())
        throw Error("number formatting failed");
    return std::string(buf, ptr);
}

void write_line(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i)
            out << ',';
        out << fields[i];
    }
    out << '\n';
}

} // namespace rctlab::csv
