#pragma once

#include "alignaudit/metrics/divergence.hpp"
#include "alignaudit/survey/question.hpp"
#include "alignaudit/survey/runner.hpp"

#include <map>
#include <string>
#include <vector>

namespace alignaudit::survey {

enum class KlDirection { HumanToModel, ModelToHuman };

struct AlignmentOptions {
    KlDirection direction = KlDirection::HumanToModel;  // KL(human || model)
    double epsilon = metrics::kDefaultKlEpsilon;
};

struct CulturalAlignment {
    std::map<std::string, double> per_question;   // question id -> KL
    std::map<std::string, double> per_dimension;  // value dimension -> mean KL
    double overall = 0.0;                         // mean of dimension means
    std::vector<std::string> missing_human;       // excluded question ids
    std::vector<std::string> missing_model;
};

/// Mean KL per value dimension between model and human population-level
/// distributions for one culture, plus the macro average over dimensions.
/// Questions outside the culture's scope are ignored; in-scope questions
/// lacking either distribution are listed and excluded.
CulturalAlignment cultural_alignment(const std::map<std::string, metrics::ProbDist>& model_dists,
                                     const HumanDataset& human, const std::vector<SurveyQuestion>& questions,
                                     Culture culture, const AlignmentOptions& options = {});

struct VariationPoint {
    double kl_to_us = 0.0;  // x
    double kl_to_cn = 0.0;  // y
};

/// Places one set of model distributions in the (KL-to-US, KL-to-CN) plane.
VariationPoint variation_map_point(const std::map<std::string, metrics::ProbDist>& model_dists,
                                   const HumanDataset& human, const std::vector<SurveyQuestion>& questions,
                                   const AlignmentOptions& options = {});

/// |x(CN-persona run) - x(US-persona run)|: how far apart the model lands
/// when asked to simulate each culture.
double variation_separation(const VariationPoint& us_persona_run, const VariationPoint& cn_persona_run);

struct MismatchProfile {
    std::size_t evaluated = 0;
    std::size_t mismatches = 0;
    std::size_t excluded = 0;  // records whose demographic cell has no human data
    std::map<std::string, std::size_t> by_gender;  // counts within the mismatch set
    std::map<std::string, std::size_t> by_age_group;
    std::map<std::string, double> gender_share;  // proportions; each sums to 1 when mismatches > 0
    std::map<std::string, double> age_share;
};

/// A valid record mismatches when its choice differs from the modal human
/// answer (lowest index on ties) of its persona's (culture, gender, age)
/// cell. Reports the composition of the mismatch set by gender and age.
MismatchProfile demographic_mismatch_profile(const std::vector<ResponseRecord>& records, const HumanDataset& human);

/// Model distribution per question from survey records; questions without
/// usable records are omitted.
std::map<std::string, metrics::ProbDist> model_distributions(const std::vector<ResponseRecord>& records,
                                                             const std::vector<SurveyQuestion>& questions,
                                                             DistributionMode mode,
                                                             std::optional<Culture> culture = std::nullopt);

}  // namespace alignaudit::survey
