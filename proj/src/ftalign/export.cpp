#include "alignaudit/ftalign/export.hpp"

#include "alignaudit/common/csv.hpp"
#include "alignaudit/common/error.hpp"
#include "alignaudit/common/hash.hpp"
#include "alignaudit/common/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>

namespace alignaudit::ftalign {

namespace {

std::map<std::string, const survey::SurveyQuestion*> by_id(const std::vector<survey::SurveyQuestion>& questions) {
    std::map<std::string, const survey::SurveyQuestion*> out;
    for (const auto& q : questions) out[q.id] = &q;
    return out;
}

}  // namespace

std::vector<AlignmentExample> load_country_distributions(const std::string& path,
                                                         const std::vector<survey::SurveyQuestion>& questions) {
    auto table = read_csv_table(path, {"question_id", "country", "option_index", "proportion"});
    const auto lookup = by_id(questions);
    std::optional<std::size_t> demo_col;
    if (std::find(table.header.begin(), table.header.end(), "demographic") != table.header.end()) {
        demo_col = table.column("demographic");
    }
    const std::size_t qcol = table.column("question_id"), ccol = table.column("country"),
                      icol = table.column("option_index"), pcol = table.column("proportion");

    std::vector<std::string> order;
    std::map<std::string, std::vector<double>> mass;
    std::map<std::string, const survey::SurveyQuestion*> question_of;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::string where = path + ":" + std::to_string(r + 2);
        const auto& qid = row[qcol];
        auto it = lookup.find(qid);
        if (it == lookup.end()) throw ConfigError(where + ": unknown question '" + qid + "'");
        std::string key = qid + "|" + row[ccol];
        if (demo_col && !row[*demo_col].empty()) key += "|" + row[*demo_col];
        std::size_t index = 0;
        double p = 0.0;
        try {
            index = std::stoul(row[icol]);
            p = std::stod(row[pcol]);
        } catch (const std::exception&) {
            throw ConfigError(where + ": non-numeric option_index or proportion");
        }
        if (index >= it->second->options.size()) throw ConfigError(where + ": option_index out of range");
        auto [slot, fresh] = mass.try_emplace(key, std::vector<double>(it->second->options.size(), 0.0));
        if (fresh) {
            order.push_back(key);
            question_of[key] = it->second;
        }
        slot->second[index] += p;
    }
    std::vector<AlignmentExample> out;
    for (const auto& key : order) {
        out.push_back({key, metrics::ProbDist(question_of[key]->labels(), mass[key])});
    }
    return out;
}

std::string default_export_template() {
    return "You are answering a public opinion survey as a typical respondent from {country}{demographic}.\n"
           "Question: {question}\n"
           "{options}\n"
           "Answer with the letter of one option.\n"
           "Answer:";
}

ExportManifest export_training_data(const std::vector<AlignmentExample>& examples,
                                    const std::vector<survey::SurveyQuestion>& questions, const std::string& out_dir,
                                    const ExportOptions& options) {
    if (examples.empty()) throw DegenerateInputError("export: no examples");
    const auto lookup = by_id(questions);
    std::vector<std::string> problems;
    std::vector<ExportRecord> records;

    for (const auto& e : examples) {
        bool labels_ok = true;
        for (const auto& label : e.target.labels()) {
            if (label.size() != 1 || !std::isalnum(static_cast<unsigned char>(label[0]))) labels_ok = false;
        }
        if (!labels_ok) {
            problems.push_back(e.context_key + ": option labels are not single alphanumeric characters");
            continue;
        }
        auto parts = split(e.context_key, '|');
        if (parts.size() < 2) {
            problems.push_back(e.context_key + ": context key lacks a country segment");
            continue;
        }
        auto it = lookup.find(parts[0]);
        if (it == lookup.end()) {
            problems.push_back(e.context_key + ": unknown question '" + parts[0] + "'");
            continue;
        }
        const auto& q = *it->second;
        if (q.labels() != e.target.labels()) {
            problems.push_back(e.context_key + ": target labels do not match the question's options");
            continue;
        }
        std::ostringstream opts;
        for (std::size_t i = 0; i < q.options.size(); ++i) {
            if (i) opts << '\n';
            opts << q.labels()[i] << ". " << q.options[i];
        }
        std::string demographic = parts.size() > 2 ? " (" + parts[2] + ")" : "";
        try {
            ExportRecord rec{e.context_key,
                             render_template(options.prompt_template, {{"question", q.text},
                                                                       {"options", opts.str()},
                                                                       {"country", parts[1]},
                                                                       {"demographic", demographic}}),
                             {},
                             e.target};
            for (const auto& label : e.target.labels()) rec.option_tokens.push_back(options.option_token_prefix + label);
            records.push_back(std::move(rec));
        } catch (const Error& err) {
            problems.push_back(e.context_key + ": " + err.what());
        }
    }
    if (!problems.empty()) {
        throw ConfigError("export: " + std::to_string(problems.size()) + " context(s) rejected:\n  " +
                          join(problems, "\n  "));
    }

    std::string body;
    for (const auto& rec : records) {
        nlohmann::json line = {{"context_key", rec.context_key},
                               {"prompt", rec.prompt},
                               {"option_tokens", rec.option_tokens},
                               {"target_distribution", {{"labels", rec.target.labels()}, {"mass", rec.target.mass()}}}};
        body += line.dump() + "\n";
    }
    std::filesystem::create_directories(out_dir);
    const std::string data_file = "train.jsonl";
    write_file_atomic((std::filesystem::path(out_dir) / data_file).string(), body);

    ExportManifest manifest{data_file, sha256_hex(body), records.size(), sha256_hex(options.prompt_template)};
    nlohmann::json mj = {{"format", "alignaudit.ftalign.export.v1"},
                         {"files", {{{"path", manifest.data_file}, {"sha256", manifest.sha256},
                                     {"records", manifest.records}}}},
                         {"prompt_template_sha256", manifest.template_sha256},
                         {"option_token_prefix", options.option_token_prefix}};
    write_file_atomic((std::filesystem::path(out_dir) / "manifest.json").string(), mj.dump(2) + "\n");
    return manifest;
}

std::vector<ExportRecord> read_training_data(const std::string& path) {
    std::istringstream in(read_file(path));
    std::vector<ExportRecord> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (trim(line).empty()) continue;
        try {
            auto j = nlohmann::json::parse(line);
            const auto& td = j.at("target_distribution");
            out.push_back({j.at("context_key").get<std::string>(), j.at("prompt").get<std::string>(),
                           j.at("option_tokens").get<std::vector<std::string>>(),
                           metrics::ProbDist::from_normalized(td.at("labels").get<std::vector<std::string>>(),
                                                              td.at("mass").get<std::vector<double>>())});
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(path + ":" + std::to_string(n) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace alignaudit::ftalign
