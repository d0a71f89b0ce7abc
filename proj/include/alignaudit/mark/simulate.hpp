#pragma once

#include "alignaudit/backend/backend.hpp"
#include "alignaudit/mark/type_dynamics.hpp"
#include "alignaudit/survey/persona.hpp"
#include "alignaudit/survey/question.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace alignaudit::mark {

inline constexpr std::size_t kStageCount = 4;
const std::array<std::string, kStageCount>& stage_names();  // stress, personality, cognition, synthesis

/// Prompt templates for the four stages. Placeholders: {persona},
/// {question}, {stress}, {type}, {functions}, {history}. Stages 2-4 must
/// contain {history}, which expands to every earlier stage output verbatim.
struct StageTemplates {
    std::array<std::string, kStageCount> text;

    void validate() const;      // throws ConfigError
    std::string version() const;  // first 16 hex chars of the SHA-256 of all four texts
};

/// Reads stress.txt, personality.txt, cognition.txt and synthesis.txt.
StageTemplates load_stage_templates(const std::string& dir);
const StageTemplates& bundled_templates();

/// One human answer from the respondent-level survey file.
struct HumanResponse {
    std::string respondent_id;
    std::string question_id;
    std::size_t choice = 0;  // 0-based option index
};

struct RespondentData {
    std::map<std::string, survey::PersonaProfile> respondents;  // persona.extra holds ideology / opinion
    std::vector<HumanResponse> responses;                        // file order

    const HumanResponse* find(const std::string& respondent_id, const std::string& question_id) const;
};

/// CSV columns: respondent_id, gender, age_group, location, ideology,
/// opinion, question_id, choice (0-based); an optional culture column
/// defaults to US. Respondent attributes must agree across rows.
RespondentData load_respondents(const std::string& path, const std::vector<survey::SurveyQuestion>& questions);

/// Persona text given to MARK and the Demo+Ideo baseline (demographics and
/// ideology); `with_opinion` also adds the opinion field.
std::string persona_text(const survey::PersonaProfile& persona, bool with_opinion = false);

/// Question text followed by lettered options.
std::string question_block(const survey::SurveyQuestion& question);

struct StageRecord {
    std::string prompt;                    // prompt of the first attempt
    std::vector<std::string> completions;  // every attempt, including a corrective reprompt
    std::string output() const { return completions.empty() ? std::string{} : completions.back(); }
};

struct ReasoningTrace {
    std::string respondent_id;
    std::string question_id;
    std::string persona;
    std::string stress_summary;
    MbtiType predicted_type;
    std::string cognitive_analysis;
    std::string final_choice;  // option label
    std::size_t final_index = 0;
    std::array<StageRecord, kStageCount> stages;
    std::string template_version;
    std::string type_table_digest;
    std::string backend_id;

    std::size_t reprompts() const;
};

nlohmann::json to_json(const ReasoningTrace& t);
ReasoningTrace trace_from_json(const nlohmann::json& j);

struct SimulateOptions {
    backend::GenerationConfig generation;
    std::string respondent_id;
};

/// Runs the four stages serially. Stage 2 output must name one of the 16
/// types and stage 4 output must parse to an option; each gets one
/// corrective reprompt, after which ParseError is thrown. Stage 3 embeds the
/// predicted type's function stack.
ReasoningTrace simulate(backend::Backend& backend, const std::string& persona, const survey::SurveyQuestion& question,
                        const StageTemplates& templates, const TypeDynamics& dynamics,
                        const SimulateOptions& options = {});

struct SimulationTask {
    std::string respondent_id;
    std::string persona;
    const survey::SurveyQuestion* question = nullptr;
};

/// One task per human response whose question is in `questions`.
std::vector<SimulationTask> tasks_for(const RespondentData& data, const std::vector<survey::SurveyQuestion>& questions,
                                      bool with_opinion = false);

/// Simulations in parallel (up to `concurrency`, capped by the backend);
/// results in task order. Per-task seeds derive from `seed`, respondent and
/// question, so results do not depend on scheduling.
std::vector<ReasoningTrace> run_simulations(backend::Backend& backend, const std::vector<SimulationTask>& tasks,
                                            const StageTemplates& templates, const TypeDynamics& dynamics,
                                            std::uint64_t seed, std::size_t concurrency = 4);

std::string traces_jsonl(const std::vector<ReasoningTrace>& traces);

}  // namespace alignaudit::mark
