#include "alignaudit/dilemma/statistics.hpp"

#include "alignaudit/common/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

namespace alignaudit::dilemma {

PreferenceResult preference_rate(const std::vector<ChoiceTrajectory>& trajectories, ValuePair pair,
                                 std::optional<std::size_t> stage) {
    PreferenceResult r;
    std::size_t first_pole = 0;
    for (const auto& t : trajectories) {
        if (t.value_pair != pair) continue;
        for (const auto& e : t.entries) {
            if (stage && e.stage != *stage) continue;
            if (e.choice == Choice::Invalid) {
                ++r.invalid;
                continue;
            }
            ++r.valid;
            if (e.choice == Choice::A) ++first_pole;
        }
    }
    if (r.valid == 0) throw DegenerateInputError("preference_rate: no valid choices for " + to_string(pair));
    r.rate = static_cast<double>(first_pole) / static_cast<double>(r.valid);
    return r;
}

FlipResult flip_rate(const std::vector<ChoiceTrajectory>& baseline, const std::vector<ChoiceTrajectory>& consequence) {
    using Key = std::tuple<std::string, std::size_t, std::size_t>;
    std::map<Key, Choice> after;
    for (const auto& t : consequence) {
        for (const auto& e : t.entries) after[{t.sequence_id, e.stage, e.variant}] = e.choice;
    }
    FlipResult r;
    for (const auto& t : baseline) {
        for (const auto& e : t.entries) {
            auto it = after.find({t.sequence_id, e.stage, e.variant});
            if (it == after.end() || e.choice == Choice::Invalid || it->second == Choice::Invalid) {
                ++r.excluded;
                continue;
            }
            ++r.pairs;
            if (it->second != e.choice) ++r.flips;
        }
    }
    if (r.pairs == 0) throw DegenerateInputError("flip_rate: no valid paired decisions");
    r.rate = static_cast<double>(r.flips) / static_cast<double>(r.pairs);
    return r;
}

AgreementResult agreement_ratio(const std::vector<ChoiceTrajectory>& trajectories) {
    std::map<std::pair<std::string, std::size_t>, std::array<std::size_t, 2>> cells;
    for (const auto& t : trajectories) {
        for (const auto& e : t.entries) {
            auto& counts = cells[{t.sequence_id, e.stage}];
            if (e.choice == Choice::A) ++counts[0];
            if (e.choice == Choice::B) ++counts[1];
        }
    }
    AgreementResult r;
    double sum = 0.0;
    for (const auto& [key, counts] : cells) {
        const auto valid = counts[0] + counts[1];
        if (valid < 2) {
            ++r.excluded;
            continue;
        }
        ++r.cells;
        sum += static_cast<double>(std::max(counts[0], counts[1])) / static_cast<double>(valid);
    }
    if (r.cells == 0) throw DegenerateInputError("agreement_ratio: no cell has two valid choices");
    r.ratio = sum / static_cast<double>(r.cells);
    return r;
}

VolatilityResult rank_volatility(const std::map<std::string, std::vector<std::optional<MftRanking>>>& rankings) {
    VolatilityResult out;
    std::array<double, 5> total{};
    std::size_t models = 0;
    for (const auto& [model, stages] : rankings) {
        std::array<double, 5> moved{};
        std::size_t transitions = 0;
        for (std::size_t s = 0; s + 1 < stages.size(); ++s) {
            if (!stages[s] || !stages[s + 1]) continue;
            ++transitions;
            for (std::size_t d = 0; d < 5; ++d) moved[d] += std::abs((*stages[s + 1])[d] - (*stages[s])[d]);
        }
        out.transitions[model] = transitions;
        if (transitions == 0) continue;
        ++models;
        for (std::size_t d = 0; d < 5; ++d) total[d] += moved[d] / static_cast<double>(transitions);
    }
    if (models == 0) throw DegenerateInputError("rank_volatility: no model has two consecutive stage rankings");
    for (std::size_t d = 0; d < 5; ++d) out.volatility[kMftDimensions[d]] = total[d] / static_cast<double>(models);
    return out;
}

namespace {

// Ranks 1..5 from scores, higher score = more salient; ties keep canonical order.
MftRanking rank_by_score(const std::array<double, 5>& score) {
    std::array<std::size_t, 5> order{};
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
    MftRanking ranks{};
    for (std::size_t pos = 0; pos < 5; ++pos) ranks[order[pos]] = static_cast<int>(pos) + 1;
    return ranks;
}

std::size_t max_stage_count(const std::vector<ScenarioSequence>& corpus) {
    std::size_t n = 0;
    for (const auto& s : corpus) n = std::max(n, s.stages.size());
    return n;
}

}  // namespace

std::vector<std::optional<MftRanking>> mft_rankings_from_tags(const std::vector<ScenarioSequence>& corpus) {
    const std::size_t stages = max_stage_count(corpus);
    std::vector<std::optional<MftRanking>> out(stages);
    for (std::size_t k = 0; k < stages; ++k) {
        std::array<double, 5> rank_sum{}, count{};
        bool any = false;
        for (const auto& s : corpus) {
            auto it = s.mft_tags.find(k);
            if (it == s.mft_tags.end()) continue;
            for (const auto& t : it->second) {
                auto d = static_cast<std::size_t>(t.dimension);
                rank_sum[d] += t.rank;
                count[d] += 1.0;
                any = true;
            }
        }
        if (!any) continue;
        std::array<double, 5> score{};
        for (std::size_t d = 0; d < 5; ++d) score[d] = count[d] > 0 ? -rank_sum[d] / count[d] : -1e9;
        out[k] = rank_by_score(score);
    }
    return out;
}

std::vector<std::optional<MftRanking>> mft_rankings_from_choices(const std::vector<ScenarioSequence>& corpus,
                                                                 const std::vector<ChoiceTrajectory>& trajectories) {
    const std::size_t stages = max_stage_count(corpus);
    std::vector<std::optional<MftRanking>> out(stages);
    std::map<std::string, const ScenarioSequence*> by_id;
    for (const auto& s : corpus) by_id[s.id] = &s;
    for (std::size_t k = 0; k < stages; ++k) {
        std::array<double, 5> wins{}, seen{};
        bool any = false;
        for (const auto& t : trajectories) {
            auto seq = by_id.find(t.sequence_id);
            if (seq == by_id.end()) continue;
            auto tags = seq->second->mft_tags.find(k);
            if (tags == seq->second->mft_tags.end()) continue;
            for (const auto& e : t.entries) {
                if (e.stage != k || e.choice == Choice::Invalid) continue;
                for (const auto& tag : tags->second) {
                    auto d = static_cast<std::size_t>(tag.dimension);
                    seen[d] += 1.0;
                    if (e.choice == tag.pole) wins[d] += 1.0;
                    any = true;
                }
            }
        }
        if (!any) continue;
        std::array<double, 5> score{};
        for (std::size_t d = 0; d < 5; ++d) score[d] = seen[d] > 0 ? wins[d] / seen[d] : -1.0;
        out[k] = rank_by_score(score);
    }
    return out;
}

}  // namespace alignaudit::dilemma
