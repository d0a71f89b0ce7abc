#pragma once

#include "alignaudit/backend/backend.hpp"
#include "alignaudit/metrics/prob_dist.hpp"
#include "alignaudit/survey/persona.hpp"
#include "alignaudit/survey/question.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace alignaudit::survey {

enum class MemoryPolicy { Stateless, SlidingWindow };

struct ParamRange {
    double min = 0.0;
    double max = 0.0;
};

/// Diversity-Enhanced Framework knobs.
struct DiversityConfig {
    std::vector<std::string> location_pool;
    int paraphrase_count = 2;
    // Recognized keys: "temperature", "max_tokens".
    std::map<std::string, ParamRange> generation_param_ranges{{"temperature", {0.0, 0.0}}};
    MemoryPolicy memory_policy = MemoryPolicy::Stateless;
    int memory_window = 3;
    int invalid_retry_limit = 2;
    bool detect_conflicts = true;  // CV detection needs paraphrase_count >= 2
    std::size_t concurrency = 4;
};

void validate(const DiversityConfig& config);

struct SurveyAnswer {
    enum class Kind { Valid, OutOfRange, Unparseable };
    Kind kind = Kind::Unparseable;
    std::size_t index = 0;  // option index when Valid
    std::string token;      // the matched option token ("F", "7", ...)
};

/// Extracts an option choice from a completion. Recognized forms, in order:
/// a final "Answer: X" line, "I choose X" / "option X" phrases, a leading
/// letter followed by punctuation or end of text ("B.", "(C)", "A"), and a
/// bare leading option number. A letter or number beyond `option_count` is
/// OutOfRange.
SurveyAnswer parse_survey_answer(const std::string& text, std::size_t option_count);

struct ResponseRecord {
    std::size_t persona_index = 0;
    PersonaProfile persona;  // as presented in the prompt (sampled location)
    std::string question_id;
    std::size_t paraphrase_index = 0;
    std::string prompt;
    backend::GenerationConfig config;
    std::vector<std::string> raw_completions;  // every attempt, in order
    std::optional<std::size_t> choice;         // valid option index
    std::optional<std::string> out_of_range;   // token of an out-of-range choice
    std::optional<metrics::ProbDist> first_token;
    bool dropped = false;  // unparseable after all retries
    std::string backend_id;

    const std::string& final_completion() const;
    friend bool operator==(const ResponseRecord&, const ResponseRecord&) = default;
};

nlohmann::json to_json(const ResponseRecord& r);
ResponseRecord record_from_json(const nlohmann::json& j);

struct SurveyRunOptions {
    // Records from an interrupted run; their personas are not re-queried.
    std::vector<ResponseRecord> resume_records;
    // Called once per finished persona with that persona's records; calls are
    // serialized.
    std::function<void(const std::vector<ResponseRecord>&)> on_persona_complete;
    std::string prompt_template;  // empty selects default_survey_template()
};

struct SurveyRun {
    std::vector<ResponseRecord> records;  // sorted by (persona, question order, paraphrase)
    std::size_t drop_count = 0;
    std::size_t retry_count = 0;
};

/// Survey prompt; placeholders {persona}, {history}, {question}, {options}.
const std::string& default_survey_template();
/// Framings applied to the question text when a question has no explicit
/// paraphrases; paraphrase 0 is the verbatim text.
const std::vector<std::string>& default_paraphrase_frames();
std::string paraphrase(const SurveyQuestion& q, std::size_t index);

/// Context key the survey attaches to each request: "qid|culture|gender|age".
std::string survey_context_key(const SurveyQuestion& q, const PersonaProfile& p);

/// Issues one prompt per (persona, in-scope question, paraphrase) with a
/// sampled location and sampled generation parameters. Unparseable answers
/// are retried up to `invalid_retry_limit` times and then dropped; every raw
/// completion is kept. Personas run concurrently up to the backend's bound;
/// questions within a persona run in order so sliding-window memory is
/// well-defined. Backend errors propagate after the other personas finish
/// (and are checkpointed).
SurveyRun run_survey(backend::Backend& backend, const std::vector<SurveyQuestion>& questions,
                     const std::vector<PersonaProfile>& personas, const DiversityConfig& config,
                     std::uint64_t seed, const SurveyRunOptions& options = {});

enum class DistributionMode { Hard, Soft };

/// Hard: empirical choice frequencies. Soft: mean of first-token
/// distributions of valid records. Throws DegenerateInputError when the
/// question has no usable record.
metrics::ProbDist preference_distribution(const std::vector<ResponseRecord>& records, const SurveyQuestion& question,
                                          DistributionMode mode = DistributionMode::Hard);

}  // namespace alignaudit::survey
