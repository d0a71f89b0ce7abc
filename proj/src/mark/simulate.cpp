#include "alignaudit/mark/simulate.hpp"

#include "alignaudit/common/csv.hpp"
#include "alignaudit/common/error.hpp"
#include "alignaudit/common/hash.hpp"
#include "alignaudit/common/parallel.hpp"
#include "alignaudit/common/text.hpp"
#include "alignaudit/survey/runner.hpp"

#include <algorithm>
#include <filesystem>
#include <set>
#include <sstream>

namespace alignaudit::mark {

namespace {

const std::array<std::string, kStageCount> kFiles{"stress.txt", "personality.txt", "cognition.txt", "synthesis.txt"};
const std::array<std::string, kStageCount> kTitles{"Stage 1: stress analysis", "Stage 2: personality prediction",
                                                   "Stage 3: cognitive reasoning", "Stage 4: synthesis"};

std::string history_of(const std::array<StageRecord, kStageCount>& stages, std::size_t upto) {
    std::string out;
    for (std::size_t s = 0; s < upto; ++s) {
        if (s) out += "\n\n";
        out += "[" + kTitles[s] + "]\n" + stages[s].output();
    }
    return out;
}

std::string corrective(const std::string& prompt, const std::string& reply, const std::string& demand) {
    return prompt + "\n\nYour previous reply was:\n" + reply + "\n\nThat reply could not be used. " + demand;
}

}  // namespace

const std::array<std::string, kStageCount>& stage_names() {
    static const std::array<std::string, kStageCount> names{"stress", "personality", "cognition", "synthesis"};
    return names;
}

void StageTemplates::validate() const {
    static const std::set<std::string> kAllowed{"persona", "question", "stress", "type", "functions", "history"};
    for (std::size_t s = 0; s < kStageCount; ++s) {
        if (trim(text[s]).empty()) throw ConfigError("mark template '" + stage_names()[s] + "' is empty");
        auto names = template_placeholders(text[s]);
        for (const auto& n : names) {
            if (!kAllowed.count(n)) {
                throw ConfigError("mark template '" + stage_names()[s] + "' uses unknown placeholder {" + n + "}");
            }
        }
        if (s > 0 && std::find(names.begin(), names.end(), "history") == names.end()) {
            throw ConfigError("mark template '" + stage_names()[s] + "' must contain {history}");
        }
    }
}

std::string StageTemplates::version() const {
    std::string all;
    for (const auto& t : text) all += t + '\x1e';
    return sha256_hex(all).substr(0, 16);
}

StageTemplates load_stage_templates(const std::string& dir) {
    StageTemplates out;
    for (std::size_t s = 0; s < kStageCount; ++s) {
        out.text[s] = read_file((std::filesystem::path(dir) / kFiles[s]).string());
    }
    out.validate();
    return out;
}

const StageTemplates& bundled_templates() {
    static const StageTemplates t = load_stage_templates(std::string(ALIGNAUDIT_DATA_DIR) + "/mark/templates");
    return t;
}

const HumanResponse* RespondentData::find(const std::string& respondent_id, const std::string& question_id) const {
    for (const auto& r : responses) {
        if (r.respondent_id == respondent_id && r.question_id == question_id) return &r;
    }
    return nullptr;
}

RespondentData load_respondents(const std::string& path, const std::vector<survey::SurveyQuestion>& questions) {
    auto table = read_csv_table(path, {"respondent_id", "gender", "age_group", "location", "ideology", "opinion",
                                       "question_id", "choice"});
    std::map<std::string, const survey::SurveyQuestion*> by_id;
    for (const auto& q : questions) by_id[q.id] = &q;
    const bool has_culture =
        std::find(table.header.begin(), table.header.end(), "culture") != table.header.end();

    RespondentData out;
    std::set<std::pair<std::string, std::string>> seen;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::string where = path + ":" + std::to_string(r + 2);
        auto cell = [&](const char* name) { return row[table.column(name)]; };
        try {
            survey::PersonaProfile p;
            p.gender = survey::parse_gender(cell("gender"));
            p.age_group = survey::parse_age_group(cell("age_group"));
            p.location = cell("location");
            p.culture = has_culture ? survey::parse_culture(cell("culture")) : survey::Culture::US;
            if (!cell("ideology").empty()) p.extra["ideology"] = cell("ideology");
            if (!cell("opinion").empty()) p.extra["opinion"] = cell("opinion");
            const std::string id = cell("respondent_id");
            if (id.empty()) throw ConfigError("empty respondent_id");
            auto [it, fresh] = out.respondents.try_emplace(id, p);
            if (!fresh && (it->second.describe() != p.describe())) {
                throw ConfigError("respondent '" + id + "' has inconsistent attributes");
            }
            const std::string qid = cell("question_id");
            auto q = by_id.find(qid);
            if (q == by_id.end()) throw ConfigError("unknown question '" + qid + "'");
            std::size_t choice = std::stoul(cell("choice"));
            if (choice >= q->second->options.size()) throw ConfigError("choice out of range");
            if (!seen.insert({id, qid}).second) throw ConfigError("duplicate response for " + id + "/" + qid);
            out.responses.push_back({id, qid, choice});
        } catch (const ConfigError& e) {
            throw ConfigError(where + ": " + e.what());
        } catch (const std::invalid_argument&) {
            throw ConfigError(where + ": non-numeric choice");
        }
    }
    if (out.responses.empty()) throw ConfigError(path + ": no responses");
    return out;
}

std::string persona_text(const survey::PersonaProfile& persona, bool with_opinion) {
    survey::PersonaProfile p = persona;
    p.extra.clear();
    if (auto it = persona.extra.find("ideology"); it != persona.extra.end()) p.extra["ideology"] = it->second;
    if (with_opinion) {
        if (auto it = persona.extra.find("opinion"); it != persona.extra.end()) p.extra["opinion"] = it->second;
    }
    return p.describe();
}

std::string question_block(const survey::SurveyQuestion& question) {
    std::string out = question.text;
    const auto labels = question.labels();
    for (std::size_t i = 0; i < question.options.size(); ++i) out += "\n" + labels[i] + ". " + question.options[i];
    return out;
}

std::size_t ReasoningTrace::reprompts() const {
    std::size_t n = 0;
    for (const auto& s : stages) n += s.completions.empty() ? 0 : s.completions.size() - 1;
    return n;
}

nlohmann::json to_json(const ReasoningTrace& t) {
    nlohmann::json stages = nlohmann::json::array();
    for (std::size_t s = 0; s < kStageCount; ++s) {
        stages.push_back({{"stage", stage_names()[s]},
                          {"prompt", t.stages[s].prompt},
                          {"completions", t.stages[s].completions}});
    }
    return {{"respondent_id", t.respondent_id},
            {"question_id", t.question_id},
            {"persona", t.persona},
            {"stress_summary", t.stress_summary},
            {"predicted_type", {{"code", t.predicted_type.code}, {"function_stack", t.predicted_type.function_stack}}},
            {"cognitive_analysis", t.cognitive_analysis},
            {"final_choice", t.final_choice},
            {"final_index", t.final_index},
            {"stages", stages},
            {"template_version", t.template_version},
            {"type_table_digest", t.type_table_digest},
            {"backend_id", t.backend_id}};
}

ReasoningTrace trace_from_json(const nlohmann::json& j) {
    ReasoningTrace t;
    t.respondent_id = j.at("respondent_id").get<std::string>();
    t.question_id = j.at("question_id").get<std::string>();
    t.persona = j.at("persona").get<std::string>();
    t.stress_summary = j.at("stress_summary").get<std::string>();
    t.predicted_type.code = j.at("predicted_type").at("code").get<std::string>();
    t.predicted_type.function_stack = j.at("predicted_type").at("function_stack").get<FunctionStack>();
    t.cognitive_analysis = j.at("cognitive_analysis").get<std::string>();
    t.final_choice = j.at("final_choice").get<std::string>();
    t.final_index = j.at("final_index").get<std::size_t>();
    const auto& stages = j.at("stages");
    if (stages.size() != kStageCount) throw StructuralError("trace must have four stages");
    for (std::size_t s = 0; s < kStageCount; ++s) {
        t.stages[s].prompt = stages[s].at("prompt").get<std::string>();
        t.stages[s].completions = stages[s].at("completions").get<std::vector<std::string>>();
    }
    t.template_version = j.at("template_version").get<std::string>();
    t.type_table_digest = j.at("type_table_digest").get<std::string>();
    t.backend_id = j.value("backend_id", std::string{});
    return t;
}

ReasoningTrace simulate(backend::Backend& backend, const std::string& persona, const survey::SurveyQuestion& question,
                        const StageTemplates& templates, const TypeDynamics& dynamics,
                        const SimulateOptions& options) {
    templates.validate();
    ReasoningTrace t;
    t.respondent_id = options.respondent_id;
    t.question_id = question.id;
    t.persona = persona;
    t.template_version = templates.version();
    t.type_table_digest = dynamics.digest();
    t.backend_id = backend.id();

    std::map<std::string, std::string> vars{{"persona", persona}, {"question", question_block(question)},
                                            {"stress", ""},       {"type", ""},
                                            {"functions", ""},    {"history", ""}};
    const std::uint64_t base = options.generation.seed.value_or(0);
    auto call = [&](std::size_t stage, std::size_t attempt, const std::string& prompt,
                    const std::vector<std::string>& option_tokens) {
        backend::Request req;
        req.prompt = prompt;
        req.config = options.generation;
        req.config.seed = mix_seed(base, stage, attempt);
        req.context_key = "mark|" + question.id + "|" + stage_names()[stage];
        req.option_tokens = option_tokens;
        return backend.complete(req).text;
    };

    for (std::size_t s = 0; s < kStageCount; ++s) {
        vars["history"] = history_of(t.stages, s);
        auto& rec = t.stages[s];
        rec.prompt = render_template(templates.text[s], vars);
        if (s > 0 && rec.prompt.find(t.stages[s - 1].output()) == std::string::npos) {
            throw StructuralError("mark: stage " + std::to_string(s + 1) + " prompt lost the previous stage output");
        }
        if (s == 1) {
            rec.completions.push_back(call(s, 0, rec.prompt, all_type_codes()));
            auto code = find_type_code(rec.completions.back());
            if (!code) {
                rec.completions.push_back(call(s, 1,
                                               corrective(rec.prompt, rec.completions.back(),
                                                          "Reply with exactly one four-letter MBTI type code, "
                                                          "one of: " + join(all_type_codes(), ", ") + "."),
                                               all_type_codes()));
                code = find_type_code(rec.completions.back());
            }
            if (!code) {
                throw ParseError("mark: no MBTI type in stage 2 output after reprompt (" + question.id + ", " +
                                 options.respondent_id + "): '" + rec.completions.back() + "'");
            }
            t.predicted_type = dynamics.resolve(*code);
            vars["type"] = t.predicted_type.code;
            vars["functions"] = describe_stack(t.predicted_type.function_stack);
        } else if (s == 3) {
            const auto labels = question.labels();
            rec.completions.push_back(call(s, 0, rec.prompt, labels));
            auto ans = survey::parse_survey_answer(rec.completions.back(), labels.size());
            if (ans.kind != survey::SurveyAnswer::Kind::Valid) {
                rec.completions.push_back(call(s, 1,
                                               corrective(rec.prompt, rec.completions.back(),
                                                          "End with a line \"Answer: <letter>\" naming one of " +
                                                              join(labels, ", ") + "."),
                                               labels));
                ans = survey::parse_survey_answer(rec.completions.back(), labels.size());
            }
            if (ans.kind != survey::SurveyAnswer::Kind::Valid) {
                throw ParseError("mark: no valid final choice after reprompt (" + question.id + ", " +
                                 options.respondent_id + "): '" + rec.completions.back() + "'");
            }
            t.final_index = ans.index;
            t.final_choice = labels[ans.index];
        } else {
            rec.completions.push_back(call(s, 0, rec.prompt, {}));
            if (s == 0) {
                t.stress_summary = rec.output();
                vars["stress"] = t.stress_summary;
            } else {
                t.cognitive_analysis = rec.output();
            }
        }
    }
    return t;
}

std::vector<SimulationTask> tasks_for(const RespondentData& data, const std::vector<survey::SurveyQuestion>& questions,
                                      bool with_opinion) {
    std::map<std::string, const survey::SurveyQuestion*> by_id;
    for (const auto& q : questions) by_id[q.id] = &q;
    std::vector<SimulationTask> out;
    for (const auto& r : data.responses) {
        auto q = by_id.find(r.question_id);
        if (q == by_id.end()) continue;
        out.push_back({r.respondent_id, persona_text(data.respondents.at(r.respondent_id), with_opinion), q->second});
    }
    return out;
}

std::vector<ReasoningTrace> run_simulations(backend::Backend& backend, const std::vector<SimulationTask>& tasks,
                                            const StageTemplates& templates, const TypeDynamics& dynamics,
                                            std::uint64_t seed, std::size_t concurrency) {
    templates.validate();
    std::vector<ReasoningTrace> out(tasks.size());
    parallel_for(tasks.size(), std::min(concurrency, backend.max_concurrency()), [&](std::size_t i) {
        const auto& task = tasks[i];
        SimulateOptions opts;
        opts.respondent_id = task.respondent_id;
        opts.generation.seed = mix_seed(seed, string_seed(task.respondent_id), string_seed(task.question->id));
        out[i] = simulate(backend, task.persona, *task.question, templates, dynamics, opts);
    });
    return out;
}

std::string traces_jsonl(const std::vector<ReasoningTrace>& traces) {
    std::string out;
    for (const auto& t : traces) out += to_json(t).dump() + "\n";
    return out;
}

}  // namespace alignaudit::mark
