#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace rctlab::csv {

struct Row {
    std::size_t line = 0; // 1-based line number in the source
    std::vector<std::string> fields;
};

struct Table {
    std::string source; // file name or "<stream>", used in error messages
    std::vector<std::string> header;
    std::vector<Row> rows;

    // Index of a header column; throws ConfigError if missing.
    std::size_t column(std::string_view name) const;

    double number(const Row& row, std::size_t col) const;
    long long integer(const Row& row, std::size_t col) const;
    const std::string& text(const Row& row, std::size_t col) const;
};

// Comma-separated, no quoting. Blank lines and lines starting with '#' are
// skipped. When expected_header is non-empty the header must match it exactly.
Table parse(std::istream& in, std::string source,
            const std::vector<std::string>& expected_header = {});
Table read_file(const std::filesystem::path& path,
                const std::vector<std::string>& expected_header = {});

// Shortest decimal form that round-trips to the same double.
std::string format_number(double value);

void write_line(std::ostream& out, const std::vector<std::string>& fields);

} // namespace rctlab::csv
