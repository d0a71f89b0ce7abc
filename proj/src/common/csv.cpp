#include "alignaudit/common/csv.hpp"

#include "alignaudit/common/error.hpp"
#include "alignaudit/common/text.hpp"

#include <algorithm>

namespace alignaudit {

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false, any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                quoted = true;
                any = true;
                break;
            case ',':
                row.push_back(std::move(field));
                field.clear();
                any = true;
                break;
            case '\r':
                break;
            case '\n':
                if (any || !field.empty()) {
                    row.push_back(std::move(field));
                    rows.push_back(std::move(row));
                }
                row.clear();
                field.clear();
                any = false;
                break;
            default:
                field.push_back(c);
                any = true;
        }
    }
    if (quoted) throw ConfigError("csv: unterminated quoted field");
    if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::size_t CsvTable::column(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ConfigError("csv: missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
}

CsvTable read_csv_table(const std::string& path, const std::vector<std::string>& required) {
    auto rows = parse_csv(read_file(path));
    if (rows.empty()) throw ConfigError("csv: " + path + " is empty");
    CsvTable t;
    t.header = std::move(rows.front());
    for (auto& h : t.header) h = trim(h);
    for (const auto& name : required) {
        if (std::find(t.header.begin(), t.header.end(), name) == t.header.end()) {
            throw ConfigError("csv: " + path + " is missing column '" + name + "'");
        }
    }
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() != t.header.size()) {
            throw ConfigError("csv: " + path + " line " + std::to_string(i + 1) + " has " +
                              std::to_string(rows[i].size()) + " fields, expected " +
                              std::to_string(t.header.size()));
        }
        t.rows.push_back(std::move(rows[i]));
    }
    return t;
}

std::string csv_escape(std::string_view field) {
    if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string csv_line(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out.push_back(',');
        out += csv_escape(fields[i]);
    }
    out.push_back('\n');
    return out;
}

}  // namespace alignaudit
