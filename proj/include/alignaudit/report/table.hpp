#pragma once

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace alignaudit::report {

/// A named table of preformatted cells; numbers are rendered once, with
/// format_fixed, so every artifact derived from it is byte-stable.
struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::vector<std::string> row);  // throws StructuralError on width mismatch
    std::size_t column(const std::string& name) const;
    bool empty() const noexcept { return rows.empty(); }
    std::string to_csv() const;
};

nlohmann::json to_json(const Table& t);
Table table_from_json(const std::string& name, const nlohmann::json& j);

std::string num(double v, int precision = 6);
std::string percent(double fraction, int precision = 1);  // 0.343 -> "34.3%"

}  // namespace alignaudit::report
