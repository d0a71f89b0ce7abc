#include "alignaudit/report/table.hpp"

#include "alignaudit/common/csv.hpp"
#include "alignaudit/common/error.hpp"
#include "alignaudit/common/text.hpp"

#include <algorithm>

namespace alignaudit::report {

void Table::add_row(std::vector<std::string> row) {
    if (row.size() != columns.size()) {
        throw StructuralError("table '" + name + "': row has " + std::to_string(row.size()) + " cells, expected " +
                              std::to_string(columns.size()));
    }
    rows.push_back(std::move(row));
}

std::size_t Table::column(const std::string& col) const {
    auto it = std::find(columns.begin(), columns.end(), col);
    if (it == columns.end()) throw StructuralError("table '" + name + "' has no column '" + col + "'");
    return static_cast<std::size_t>(it - columns.begin());
}

std::string Table::to_csv() const {
    std::string out = csv_line(columns);
    for (const auto& r : rows) out += csv_line(r);
    return out;
}

nlohmann::json to_json(const Table& t) { return {{"columns", t.columns}, {"rows", t.rows}}; }

Table table_from_json(const std::string& name, const nlohmann::json& j) {
    Table t{name, j.at("columns").get<std::vector<std::string>>(), {}};
    for (const auto& r : j.at("rows")) t.add_row(r.get<std::vector<std::string>>());
    return t;
}

std::string num(double v, int precision) { return format_fixed(v, precision); }

std::string percent(double fraction, int precision) { return format_fixed(fraction * 100.0, precision) + "%"; }

}  // namespace alignaudit::report
