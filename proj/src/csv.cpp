#include "trustgame/csv.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "trustgame/error.hpp"

namespace trustgame::csv {

std::string real(double x) { return fmt::format("{:.17g}", x); }

void write(const std::filesystem::path& path, std::string_view header,
           const std::vector<std::string>& rows) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw RuntimeFailure(fmt::format("cannot create directory {}: {}", path.parent_path().string(), ec.message()));
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw RuntimeFailure(fmt::format("cannot open {} for writing", path.string()));
    out << header << '\n';
    for (const auto& row : rows) out << row << '\n';
    out.flush();
    if (!out) throw RuntimeFailure(fmt::format("write failed: {}", path.string()));
}

std::size_t Table::column(std::string_view name) const {
    for (std::size_t c = 0; c < columns.size(); ++c)
        if (columns[c] == name) return c;
    throw ValidationError(fmt::format("missing column '{}'", name));
}

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

Table read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError(fmt::format("cannot open {}", path.string()));
    Table table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split(line);
        if (table.columns.empty()) {
            table.columns = std::move(fields);
            continue;
        }
        if (fields.size() != table.columns.size())
            throw ValidationError(fmt::format("{}:{}: expected {} fields, found {}", path.string(), line_no,
                                              table.columns.size(), fields.size()));
        table.rows.push_back(std::move(fields));
    }
    if (table.columns.empty()) throw ValidationError(fmt::format("{}: empty file", path.string()));
    return table;
}

}  // namespace trustgame::csv
