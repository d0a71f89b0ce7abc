#include "alignaudit/survey/question.hpp"

#include "alignaudit/common/csv.hpp"
#include "alignaudit/common/error.hpp"
#include "alignaudit/common/text.hpp"

#include <algorithm>
#include <sstream>
#include <tuple>

namespace alignaudit::survey {

std::vector<std::string> SurveyQuestion::labels() const { return metrics::letter_labels(options.size()); }

void validate(const SurveyQuestion& q) {
    if (q.id.empty()) throw ConfigError("survey question: empty id");
    if (q.options.size() < 2 || q.options.size() > 10) {
        throw ConfigError("survey question " + q.id + ": needs 2..10 options");
    }
    if (q.value_dimension.empty()) throw ConfigError("survey question " + q.id + ": empty value_dimension");
    if (q.culture_scope.empty()) throw ConfigError("survey question " + q.id + ": empty culture_scope");
}

nlohmann::json to_json(const SurveyQuestion& q) {
    std::vector<std::string> scope;
    for (auto c : q.culture_scope) scope.push_back(to_string(c));
    nlohmann::json j{{"id", q.id},
                     {"text", q.text},
                     {"options", q.options},
                     {"value_dimension", q.value_dimension},
                     {"culture_scope", scope},
                     {"scale", q.scale == Scale::Likert ? "likert" : "nominal"}};
    if (!q.paraphrases.empty()) j["paraphrases"] = q.paraphrases;
    return j;
}

SurveyQuestion question_from_json(const nlohmann::json& j) {
    SurveyQuestion q;
    try {
        q.id = j.at("id").get<std::string>();
        q.text = j.at("text").get<std::string>();
        q.options = j.at("options").get<std::vector<std::string>>();
        q.value_dimension = j.at("value_dimension").get<std::string>();
        if (j.contains("culture_scope")) {
            q.culture_scope.clear();
            for (const auto& c : j["culture_scope"]) q.culture_scope.insert(parse_culture(c.get<std::string>()));
        }
        auto scale = j.value("scale", std::string("likert"));
        if (scale == "likert") {
            q.scale = Scale::Likert;
        } else if (scale == "nominal") {
            q.scale = Scale::Nominal;
        } else {
            throw ConfigError("survey question " + q.id + ": scale must be likert or nominal");
        }
        if (j.contains("paraphrases")) q.paraphrases = j["paraphrases"].get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("survey question: ") + e.what());
    }
    validate(q);
    return q;
}

std::vector<SurveyQuestion> load_questions(const std::string& path) {
    std::istringstream in(read_file(path));
    std::vector<SurveyQuestion> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            out.push_back(question_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        for (std::size_t i = 0; i + 1 < out.size(); ++i) {
            if (out[i].id == out.back().id) throw ConfigError(path + ": duplicate question id " + out.back().id);
        }
    }
    return out;
}

HumanDataset::HumanDataset(std::vector<HumanDistribution> rows) : rows_(std::move(rows)) {}

const HumanDistribution* HumanDataset::find(const std::string& question_id, Culture culture,
                                            std::optional<Gender> gender, std::optional<AgeGroup> age) const {
    for (const auto& r : rows_) {
        if (r.question_id == question_id && r.culture == culture && r.gender == gender && r.age_group == age) return &r;
    }
    return nullptr;
}

std::map<std::string, metrics::ProbDist> HumanDataset::population(Culture culture) const {
    std::map<std::string, metrics::ProbDist> out;
    for (const auto& r : rows_) {
        if (r.culture == culture && !r.gender && !r.age_group) out.emplace(r.question_id, r.dist);
    }
    return out;
}

HumanDataset load_human_distributions(const std::string& path, const std::vector<SurveyQuestion>& questions) {
    auto table = read_csv_table(
        path, {"survey_id", "question_id", "culture", "gender", "age_group", "option_index", "proportion"});
    const auto c_survey = table.column("survey_id"), c_q = table.column("question_id"),
               c_cul = table.column("culture"), c_g = table.column("gender"), c_a = table.column("age_group"),
               c_opt = table.column("option_index"), c_p = table.column("proportion");

    using Key = std::tuple<std::string, std::string, std::string, std::string, std::string>;
    std::map<Key, std::vector<double>> mass;
    std::vector<Key> order;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::string where = path + " row " + std::to_string(r + 2);
        auto q = std::find_if(questions.begin(), questions.end(),
                              [&](const SurveyQuestion& s) { return s.id == trim(row[c_q]); });
        if (q == questions.end()) throw ConfigError(where + ": unknown question '" + row[c_q] + "'");
        std::size_t idx;
        double p;
        try {
            idx = std::stoul(trim(row[c_opt]));
            p = std::stod(trim(row[c_p]));
        } catch (const std::exception&) {
            throw ConfigError(where + ": option_index/proportion are not numbers");
        }
        if (idx >= q->options.size()) throw ConfigError(where + ": option_index out of range");
        if (!(p >= 0.0)) throw ConfigError(where + ": negative proportion");
        Key key{trim(row[c_survey]), q->id, trim(row[c_cul]), trim(row[c_g]), trim(row[c_a])};
        auto [it, fresh] = mass.try_emplace(key, std::vector<double>(q->options.size(), 0.0));
        if (fresh) order.push_back(key);
        it->second[idx] += p;
    }

    std::vector<HumanDistribution> rows;
    for (const auto& key : order) {
        const auto& [survey_id, qid, culture, gender, age] = key;
        auto q = std::find_if(questions.begin(), questions.end(), [&](const SurveyQuestion& s) { return s.id == qid; });
        HumanDistribution h;
        h.survey_id = survey_id;
        h.question_id = qid;
        h.culture = parse_culture(culture);
        if (!gender.empty()) h.gender = parse_gender(gender);
        if (!age.empty()) h.age_group = parse_age_group(age);
        try {
            h.dist = metrics::ProbDist(q->labels(), mass.at(key));
        } catch (const Error& e) {
            throw ConfigError(path + ": question " + qid + ": " + e.what());
        }
        rows.push_back(std::move(h));
    }
    return HumanDataset(std::move(rows));
}

std::string human_distributions_csv(const HumanDataset& data) {
    std::string out = csv_line({"survey_id", "question_id", "culture", "gender", "age_group", "option_index", "proportion"});
    for (const auto& r : data.rows()) {
        for (std::size_t i = 0; i < r.dist.size(); ++i) {
            out += csv_line({r.survey_id, r.question_id, to_string(r.culture), r.gender ? to_string(*r.gender) : "",
                             r.age_group ? to_string(*r.age_group) : "", std::to_string(i),
                             format_fixed(r.dist[i], 6)});
        }
    }
    return out;
}

}  // namespace alignaudit::survey
