#include "alignaudit/report/artifacts.hpp"

#include "alignaudit/common/error.hpp"
#include "alignaudit/common/hash.hpp"
#include "alignaudit/common/text.hpp"
#include "alignaudit/report/svg.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <filesystem>

namespace fs = std::filesystem;

namespace alignaudit::report {

namespace {

std::string kind_name(FigureKind k) {
    switch (k) {
        case FigureKind::Bar: return "bar";
        case FigureKind::StackedBar: return "stacked_bar";
        case FigureKind::Scatter: return "scatter";
    }
    return "?";
}

FigureKind parse_kind(const std::string& s) {
    if (s == "bar") return FigureKind::Bar;
    if (s == "stacked_bar") return FigureKind::StackedBar;
    if (s == "scatter") return FigureKind::Scatter;
    throw StructuralError("unknown figure kind '" + s + "'");
}

bool parse_cell(const std::string& cell, double& out) {
    if (cell.empty() || cell == "NA") return false;
    try {
        std::size_t used = 0;
        std::string c = cell;
        if (!c.empty() && c.back() == '%') c.pop_back();
        out = std::stod(c, &used);
        return used == c.size();
    } catch (const std::exception&) {
        return false;
    }
}

std::string render_one(const FigureSpec& spec, const Table& t, const std::string& note) {
    std::vector<std::size_t> label_idx, value_idx;
    for (const auto& c : spec.label_columns) label_idx.push_back(t.column(c));
    for (const auto& c : spec.value_columns) value_idx.push_back(t.column(c));
    std::vector<std::string> labels;
    std::vector<std::vector<double>> values;
    for (const auto& row : t.rows) {
        std::vector<std::string> parts;
        for (auto i : label_idx) parts.push_back(row[i]);
        std::vector<double> vs;
        bool ok = true;
        for (auto i : value_idx) {
            double v = 0.0;
            ok = ok && parse_cell(row[i], v);
            vs.push_back(v);
        }
        if (!ok) continue;  // NA cells are not drawn
        labels.push_back(join(parts, " "));
        values.push_back(std::move(vs));
    }
    switch (spec.kind) {
        case FigureKind::Bar: {
            std::vector<double> v;
            for (const auto& r : values) v.push_back(r.at(0));
            return bar_svg(spec.title, spec.y_label, labels, v, note);
        }
        case FigureKind::StackedBar:
            return stacked_bar_svg(spec.title, labels, spec.value_columns, values, note);
        case FigureKind::Scatter: {
            std::vector<ScatterPoint> pts;
            for (std::size_t i = 0; i < labels.size(); ++i) pts.push_back({labels[i], values[i].at(0), values[i].at(1)});
            return scatter_svg(spec.title, spec.x_label, spec.y_label, pts, note);
        }
    }
    return {};
}

}  // namespace

const Table& AuditReport::table(const std::string& name) const {
    for (const auto& t : tables) {
        if (t.name == name) return t;
    }
    throw StructuralError("report has no table '" + name + "'");
}

Table& AuditReport::add_table(Table t) {
    for (const auto& existing : tables) {
        if (existing.name == t.name) throw StructuralError("duplicate table '" + t.name + "'");
    }
    tables.push_back(std::move(t));
    return tables.back();
}

RenderedFigures render_figures(const AuditReport& report) {
    RenderedFigures out;
    const std::string note = "config_digest " + report.config_digest;
    for (const auto& spec : report.figures) {
        const Table* t = nullptr;
        for (const auto& cand : report.tables) {
            if (cand.name == spec.table) t = &cand;
        }
        if (!t || t->empty()) {
            out.skipped.push_back("figure " + spec.file + " skipped: table '" + spec.table + "' is empty");
            continue;
        }
        out.files[spec.file] = render_one(spec, *t, note);
    }
    return out;
}

nlohmann::json to_json(const AuditReport& report) {
    nlohmann::json tables = nlohmann::json::array();
    for (const auto& t : report.tables) {
        auto j = to_json(t);
        j["name"] = t.name;
        tables.push_back(j);
    }
    nlohmann::json figures = nlohmann::json::array();
    for (const auto& f : report.figures) {
        figures.push_back({{"file", f.file},
                           {"kind", kind_name(f.kind)},
                           {"title", f.title},
                           {"table", f.table},
                           {"label_columns", f.label_columns},
                           {"value_columns", f.value_columns},
                           {"x_label", f.x_label},
                           {"y_label", f.y_label}});
    }
    std::vector<std::string> artifacts;
    for (const auto& [path, _] : report.artifacts) artifacts.push_back(path);
    return {{"format", "alignaudit.report.v1"},
            {"command", report.command},
            {"config_digest", report.config_digest},
            {"backends", report.backends},
            {"tables", tables},
            {"figures", figures},
            {"notes", report.notes},
            {"artifacts", artifacts}};
}

AuditReport report_from_json(const nlohmann::json& j) {
    AuditReport r;
    r.command = j.at("command").get<std::string>();
    r.config_digest = j.at("config_digest").get<std::string>();
    r.backends = j.at("backends").get<std::vector<std::string>>();
    for (const auto& t : j.at("tables")) r.tables.push_back(table_from_json(t.at("name").get<std::string>(), t));
    for (const auto& f : j.at("figures")) {
        r.figures.push_back({f.at("file").get<std::string>(), parse_kind(f.at("kind").get<std::string>()),
                             f.at("title").get<std::string>(), f.at("table").get<std::string>(),
                             f.at("label_columns").get<std::vector<std::string>>(),
                             f.at("value_columns").get<std::vector<std::string>>(),
                             f.value("x_label", std::string{}), f.value("y_label", std::string{})});
    }
    r.notes = j.at("notes").get<std::vector<std::string>>();
    return r;
}

nlohmann::json write_report(const std::string& out_dir, const AuditReport& input) {
    AuditReport report = input;
    auto figures = render_figures(report);
    for (const auto& s : figures.skipped) report.notes.push_back(s);

    std::map<std::string, std::string> files;  // relative path -> bytes
    files["report.json"] = to_json(report).dump(2) + "\n";
    for (const auto& t : report.tables) {
        files["tables/" + t.name + ".csv"] = "# config_digest=" + report.config_digest + "\n" + t.to_csv();
    }
    for (const auto& [name, svg] : figures.files) files["figures/" + name] = svg;
    for (const auto& [path, contents] : report.artifacts) {
        if (files.count(path)) throw StructuralError("artifact path collides with a report file: " + path);
        files[path] = contents;
    }

    nlohmann::json listed = nlohmann::json::array();
    for (const auto& [path, bytes] : files) {
        const auto full = fs::path(out_dir) / path;
        fs::create_directories(full.parent_path());
        write_file_atomic(full.string(), bytes);
        listed.push_back({{"path", path}, {"sha256", sha256_hex(bytes)}, {"bytes", bytes.size()}});
    }
    nlohmann::json manifest = {{"format", "alignaudit.manifest.v1"},
                               {"command", report.command},
                               {"config_digest", report.config_digest},
                               {"files", listed}};
    write_file_atomic((fs::path(out_dir) / "manifest.json").string(), manifest.dump(2) + "\n");
    return manifest;
}

std::vector<std::string> verify_manifest(const std::string& out_dir) {
    std::vector<std::string> problems;
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(read_file((fs::path(out_dir) / "manifest.json").string()));
    } catch (const std::exception& e) {
        return {std::string("manifest unreadable: ") + e.what()};
    }
    for (const auto& f : manifest.value("files", nlohmann::json::array())) {
        const auto path = f.at("path").get<std::string>();
        const auto full = fs::path(out_dir) / path;
        if (!fs::exists(full)) {
            problems.push_back(path + ": missing");
            continue;
        }
        if (sha256_hex(read_file(full.string())) != f.at("sha256").get<std::string>()) {
            problems.push_back(path + ": hash mismatch");
        }
    }
    return problems;
}

OutputLock::OutputLock(const std::string& out_dir) : path_((fs::path(out_dir) / ".alignaudit.lock").string()) {
    fs::create_directories(out_dir);
    int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
        if (errno == EEXIST) {
            throw ConfigError("output directory " + out_dir + " is locked by another run (" + path_ + ")");
        }
        throw ConfigError("cannot create lock " + path_ + ": " + std::strerror(errno));
    }
    const std::string pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
    ::close(fd);
}

OutputLock::~OutputLock() {
    std::error_code ec;
    fs::remove(path_, ec);
}

}  // namespace alignaudit::report
