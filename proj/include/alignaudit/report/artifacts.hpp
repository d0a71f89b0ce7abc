#pragma once

#include "alignaudit/report/table.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <string>
#include <vector>

namespace alignaudit::report {

enum class FigureKind { Bar, StackedBar, Scatter };

/// A figure drawn from one table. Bar: one bar per row, labelled by the
/// label columns, height from value_columns[0]. StackedBar: one series per
/// value column. Scatter: x and y from value_columns[0] and [1].
struct FigureSpec {
    std::string file;  // e.g. "kl_by_dimension.svg"
    FigureKind kind = FigureKind::Bar;
    std::string title;
    std::string table;
    std::vector<std::string> label_columns;
    std::vector<std::string> value_columns;
    std::string x_label;
    std::string y_label;
};

struct AuditReport {
    std::string command;
    std::string config_digest;
    std::vector<std::string> backends;
    std::vector<Table> tables;
    std::vector<FigureSpec> figures;
    std::vector<std::string> notes;
    std::map<std::string, std::string> artifacts;  // relative path -> contents (traces, records, exports)

    const Table& table(const std::string& name) const;  // throws StructuralError
    Table& add_table(Table t);
};

/// SVG bytes per figure file. A figure whose table is missing or empty is
/// skipped and a note is returned instead.
struct RenderedFigures {
    std::map<std::string, std::string> files;
    std::vector<std::string> skipped;
};
RenderedFigures render_figures(const AuditReport& report);

nlohmann::json to_json(const AuditReport& report);
AuditReport report_from_json(const nlohmann::json& j);

/// Writes report.json, tables/<name>.csv, figures/<file>, the artifacts and
/// manifest.json (SHA-256 of every file plus the config digest) under
/// `out_dir`. Output depends only on the report, so identical reports give
/// identical bytes. Returns the manifest.
nlohmann::json write_report(const std::string& out_dir, const AuditReport& report);

/// Recomputes every hash listed in out_dir/manifest.json; returns the
/// problems found (empty when intact).
std::vector<std::string> verify_manifest(const std::string& out_dir);

/// Exclusive per-directory run lock (out_dir/.alignaudit.lock), released on
/// destruction. Throws ConfigError when another run holds it.
class OutputLock {
public:
    explicit OutputLock(const std::string& out_dir);
    ~OutputLock();
    OutputLock(const OutputLock&) = delete;
    OutputLock& operator=(const OutputLock&) = delete;

private:
    std::string path_;
};

}  // namespace alignaudit::report
