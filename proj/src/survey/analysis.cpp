#include "alignaudit/survey/analysis.hpp"

#include "alignaudit/common/error.hpp"

#include <algorithm>
#include <cmath>

namespace alignaudit::survey {

CulturalAlignment cultural_alignment(const std::map<std::string, metrics::ProbDist>& model_dists,
                                     const HumanDataset& human, const std::vector<SurveyQuestion>& questions,
                                     Culture culture, const AlignmentOptions& options) {
    CulturalAlignment out;
    std::map<std::string, std::vector<double>> by_dim;
    for (const auto& q : questions) {
        if (!q.in_scope(culture)) continue;
        const auto* h = human.find(q.id, culture);
        auto m = model_dists.find(q.id);
        if (!h) out.missing_human.push_back(q.id);
        if (m == model_dists.end()) out.missing_model.push_back(q.id);
        if (!h || m == model_dists.end()) continue;
        const double kl = options.direction == KlDirection::HumanToModel
                              ? metrics::kl_divergence(h->dist, m->second, options.epsilon)
                              : metrics::kl_divergence(m->second, h->dist, options.epsilon);
        out.per_question[q.id] = kl;
        by_dim[q.value_dimension].push_back(kl);
    }
    double sum = 0.0;
    for (const auto& [dim, kls] : by_dim) {
        double mean = 0.0;
        for (double v : kls) mean += v;
        mean /= static_cast<double>(kls.size());
        out.per_dimension[dim] = mean;
        sum += mean;
    }
    out.overall = by_dim.empty() ? 0.0 : sum / static_cast<double>(by_dim.size());
    return out;
}

VariationPoint variation_map_point(const std::map<std::string, metrics::ProbDist>& model_dists,
                                   const HumanDataset& human, const std::vector<SurveyQuestion>& questions,
                                   const AlignmentOptions& options) {
    auto us = cultural_alignment(model_dists, human, questions, Culture::US, options);
    auto cn = cultural_alignment(model_dists, human, questions, Culture::CN, options);
    if (us.per_question.empty() || cn.per_question.empty()) {
        throw DegenerateInputError("variation_map_point: both cultures need at least one evaluated question");
    }
    return {us.overall, cn.overall};
}

double variation_separation(const VariationPoint& us_persona_run, const VariationPoint& cn_persona_run) {
    return std::abs(cn_persona_run.kl_to_us - us_persona_run.kl_to_us);
}

MismatchProfile demographic_mismatch_profile(const std::vector<ResponseRecord>& records, const HumanDataset& human) {
    MismatchProfile out;
    for (auto g : kGenders) out.by_gender[to_string(g)] = 0;
    for (auto a : kAgeGroups) out.by_age_group[to_string(a)] = 0;
    for (const auto& r : records) {
        if (!r.choice) continue;
        const auto* cell = human.find(r.question_id, r.persona.culture, r.persona.gender, r.persona.age_group);
        if (!cell) {
            ++out.excluded;
            continue;
        }
        ++out.evaluated;
        if (*r.choice != cell->dist.argmax()) {
            ++out.mismatches;
            ++out.by_gender[to_string(r.persona.gender)];
            ++out.by_age_group[to_string(r.persona.age_group)];
        }
    }
    for (const auto& [k, v] : out.by_gender) {
        out.gender_share[k] = out.mismatches ? static_cast<double>(v) / static_cast<double>(out.mismatches) : 0.0;
    }
    for (const auto& [k, v] : out.by_age_group) {
        out.age_share[k] = out.mismatches ? static_cast<double>(v) / static_cast<double>(out.mismatches) : 0.0;
    }
    return out;
}

std::map<std::string, metrics::ProbDist> model_distributions(const std::vector<ResponseRecord>& records,
                                                             const std::vector<SurveyQuestion>& questions,
                                                             DistributionMode mode, std::optional<Culture> culture) {
    std::vector<ResponseRecord> subset;
    for (const auto& r : records) {
        if (!culture || r.persona.culture == *culture) subset.push_back(r);
    }
    std::map<std::string, metrics::ProbDist> out;
    for (const auto& q : questions) {
        try {
            out.emplace(q.id, preference_distribution(subset, q, mode));
        } catch (const DegenerateInputError&) {
        }
    }
    return out;
}

}  // namespace alignaudit::survey
