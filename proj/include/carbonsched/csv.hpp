#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace carbonsched {

// Error carrying file and 1-based line context; line 0 means "whole file".
class DataError : public std::runtime_error {
public:
    DataError(std::string file, std::size_t line, const std::string& what);

    const std::string& file() const noexcept { return file_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string file_;
    std::size_t line_;
};

struct CsvRow {
    std::size_t line = 0;
    std::vector<std::string> fields;
};

// Header-first CSV table. Double-quoted fields and "" escapes are supported;
// embedded newlines are not.
class CsvTable {
public:
    static CsvTable read(const std::filesystem::path& path);
    static CsvTable parse(std::string_view text, std::string source_name);

    const std::string& source() const noexcept { return source_; }
    const std::vector<std::string>& header() const noexcept { return header_; }
    const std::vector<CsvRow>& rows() const noexcept { return rows_; }

    std::optional<std::size_t> find_column(std::string_view name) const;
    // Throws DataError naming the missing column.
    std::size_t column(std::string_view name) const;

private:
    std::string source_;
    std::vector<std::string> header_;
    std::vector<CsvRow> rows_;
};

std::vector<std::string> split_csv_line(std::string_view line);

// Shortest representation that parses back to the identical double.
std::string format_double(double v);

// Strict numeric parse of a whole field (surrounding blanks allowed).
std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

std::string csv_escape(std::string_view field);

std::string read_file(const std::filesystem::path& path);
// Writes atomically enough for our purposes: truncate and write.
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace carbonsched
