#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace trustgame::csv {

/// Shortest-unambiguous is not enough for byte-stable output across
/// tools; every real is written with 17 significant digits.
std::string real(double x);

/// Opens `path` for writing (creating parent directories), writes the
/// header line and all rows, LF line endings. Throws RuntimeFailure on I/O
/// errors.
void write(const std::filesystem::path& path, std::string_view header,
           const std::vector<std::string>& rows);

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    /// Index of a named column; throws ValidationError when absent.
    std::size_t column(std::string_view name) const;
};

/// Reads a comma-separated file with a header row. Throws ValidationError
/// naming the file and line on malformed input.
Table read(const std::filesystem::path& path);

}  // namespace trustgame::csv
