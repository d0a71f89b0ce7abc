#pragma once

#include "alignaudit/backend/backend.hpp"
#include "alignaudit/mark/simulate.hpp"
#include "alignaudit/survey/question.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace alignaudit::mark {

/// A simulated answer of any method, keyed by respondent and question.
struct SimulatedAnswer {
    std::string respondent_id;
    std::string question_id;
    std::size_t choice = 0;
};

std::vector<SimulatedAnswer> answers_of(const std::vector<ReasoningTrace>& traces);

/// Sampled: each answer is paired with the same respondent's human answer.
/// Global: each answer is paired with the question's population
/// distribution over all respondents; accuracy is the expected agreement
/// with a respondent drawn from it and the confusion matrix is the expected
/// one, so kappa is 0 by construction.
enum class PairingSetting { Sampled, Global };
std::string to_string(PairingSetting s);
PairingSetting parse_pairing_setting(const std::string& s);
std::string pairing_rule(PairingSetting s);

struct SimulationScore {
    double acc = 0.0;            // pooled over answers
    double one_minus_jsd = 0.0;  // mean over questions
    double emd = 0.0;            // mean over questions
    double kappa = 0.0;          // mean over questions
    std::size_t answers = 0;
    std::size_t questions = 0;
};

struct QuestionScore {
    std::size_t answers = 0;
    double acc = 0.0;
    double one_minus_jsd = 0.0;
    double emd = 0.0;
    double kappa = 0.0;
    bool kappa_degenerate = false;
};

struct ScoreResult {
    PairingSetting setting = PairingSetting::Sampled;
    SimulationScore score;
    std::map<std::string, QuestionScore> per_question;
    std::string pairing_digest;  // SHA-256 over the sorted (question, respondent) pairs
};

/// Scores simulated answers against human data. Independent of answer
/// order. Throws DegenerateInputError on an empty pairing and
/// StructuralError when an answer has no human counterpart.
ScoreResult score_simulations(const std::vector<SimulatedAnswer>& answers, const RespondentData& humans,
                              const std::vector<survey::SurveyQuestion>& questions, PairingSetting setting);

enum class BaselineKind { DemoIdeo, DemoIdeoOpinion };
std::string to_string(BaselineKind k);  // "Demo+Ideo", "Demo+Ideo+Opinion"

std::string default_baseline_template();  // {persona} {question}

/// Single-prompt baseline: one call per task with one corrective reprompt
/// on an unparseable answer, then ParseError. Tasks must carry the persona
/// text matching the baseline (see tasks_for(..., with_opinion)).
std::vector<SimulatedAnswer> run_baseline(backend::Backend& backend, const std::vector<SimulationTask>& tasks,
                                          std::uint64_t seed, std::size_t concurrency = 4,
                                          const std::string& prompt_template = default_baseline_template());

struct MethodScore {
    std::string method;
    ScoreResult result;
};

struct ComparisonRow {
    std::string method;
    SimulationScore score;
    double delta_acc = 0.0;  // reference minus this method
    double delta_one_minus_jsd = 0.0;
    double delta_emd = 0.0;
    double delta_kappa = 0.0;
};

/// Deltas of `reference` (MARK) against each baseline. Throws
/// StructuralError ("pairing mismatch") unless every method was scored in
/// the same setting on the same pairs.
std::vector<ComparisonRow> compare_baselines(const MethodScore& reference, const std::vector<MethodScore>& baselines);

}  // namespace alignaudit::mark
