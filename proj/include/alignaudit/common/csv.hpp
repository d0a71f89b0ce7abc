#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace alignaudit {

// Minimal RFC 4180 reader: quoted fields, doubled quotes, CRLF tolerated.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

// Header-keyed rows; throws ConfigError when a required column is missing.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const;
};
CsvTable read_csv_table(const std::string& path, const std::vector<std::string>& required);

std::string csv_escape(std::string_view field);
std::string csv_line(const std::vector<std::string>& fields);

}  // namespace alignaudit
