#pragma once

#include "alignaudit/metrics/prob_dist.hpp"
#include "alignaudit/survey/persona.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace alignaudit::survey {

enum class Scale { Likert, Nominal };

struct SurveyQuestion {
    std::string id;
    std::string text;
    std::vector<std::string> options;  // ordered option texts; 2..10
    std::string value_dimension;
    std::set<Culture> culture_scope{Culture::US, Culture::CN};
    Scale scale = Scale::Likert;
    std::vector<std::string> paraphrases;  // optional alternative wordings of `text`

    /// Option labels "A", "B", ... used as answer tokens.
    std::vector<std::string> labels() const;
    bool in_scope(Culture c) const { return culture_scope.count(c) > 0; }
};

/// Validates the question invariants; throws ConfigError.
void validate(const SurveyQuestion& q);

nlohmann::json to_json(const SurveyQuestion& q);
SurveyQuestion question_from_json(const nlohmann::json& j);
/// JSONL, one question per line; blank lines ignored; ids must be unique.
std::vector<SurveyQuestion> load_questions(const std::string& path);

/// Ground-truth answer proportions for one question in one culture, either
/// population-level (no selector) or for a demographic cell.
struct HumanDistribution {
    std::string survey_id;
    std::string question_id;
    Culture culture = Culture::US;
    std::optional<Gender> gender;
    std::optional<AgeGroup> age_group;
    metrics::ProbDist dist;
};

class HumanDataset {
public:
    HumanDataset() = default;
    explicit HumanDataset(std::vector<HumanDistribution> rows);

    /// Exact selector match; nullptr when absent.
    const HumanDistribution* find(const std::string& question_id, Culture culture,
                                  std::optional<Gender> gender = std::nullopt,
                                  std::optional<AgeGroup> age = std::nullopt) const;
    const std::vector<HumanDistribution>& rows() const noexcept { return rows_; }

    /// Population-level distributions for a culture keyed by question id.
    std::map<std::string, metrics::ProbDist> population(Culture culture) const;

private:
    std::vector<HumanDistribution> rows_;
};

/// CSV with columns survey_id, question_id, culture, gender, age_group,
/// option_index (0-based), proportion. Empty gender/age_group cells form the
/// population-level row. Option labels are taken from `questions`; rows for
/// unknown questions or out-of-range option indices are ConfigErrors.
HumanDataset load_human_distributions(const std::string& path, const std::vector<SurveyQuestion>& questions);

std::string human_distributions_csv(const HumanDataset& data);

}  // namespace alignaudit::survey
