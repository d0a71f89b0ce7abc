#pragma once

#include "alignaudit/dilemma/runner.hpp"
#include "alignaudit/dilemma/scenario.hpp"

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace alignaudit::dilemma {

struct PreferenceResult {
    double rate = 0.0;  // share of valid choices for the first pole (option A)
    std::size_t valid = 0;
    std::size_t invalid = 0;
};

/// Preference for the pair's first pole over trajectories of `pair`. With
/// `stage` set only that stage index counts. Throws DegenerateInputError
/// when no valid choice remains.
PreferenceResult preference_rate(const std::vector<ChoiceTrajectory>& trajectories, ValuePair pair,
                                 std::optional<std::size_t> stage = std::nullopt);

struct FlipResult {
    double rate = 0.0;
    std::size_t pairs = 0;     // valid (baseline, variant) pairs
    std::size_t flips = 0;
    std::size_t excluded = 0;  // pairs with an invalid side or no counterpart
};

/// Share of (sequence, stage, prompt variant) decisions that change pole when
/// the consequence framing is added.
FlipResult flip_rate(const std::vector<ChoiceTrajectory>& baseline, const std::vector<ChoiceTrajectory>& consequence);

struct AgreementResult {
    double ratio = 0.0;
    std::size_t cells = 0;     // (sequence, stage) cells averaged
    std::size_t excluded = 0;  // cells with fewer than two valid choices
};

/// Per (sequence, stage) cell, the share of valid variant choices equal to
/// the cell's modal choice, averaged over cells.
AgreementResult agreement_ratio(const std::vector<ChoiceTrajectory>& trajectories);

/// Salience rank (1 = most salient) of each MFT dimension, indexed like
/// kMftDimensions.
using MftRanking = std::array<int, 5>;

struct VolatilityResult {
    std::map<MftDimension, double> volatility;   // mean |rank change| between consecutive stages
    std::map<std::string, std::size_t> transitions;  // model -> transitions used
};

/// Per dimension, the mean absolute rank change between consecutive stages,
/// first averaged over each model's usable transitions, then over models.
/// A transition with a missing ranking on either side is skipped for that
/// model; models with no usable transition are ignored.
VolatilityResult rank_volatility(const std::map<std::string, std::vector<std::optional<MftRanking>>>& rankings);

/// Per stage index, dimensions ordered by mean tagged salience across the
/// corpus. Stage indices without tags yield nullopt.
std::vector<std::optional<MftRanking>> mft_rankings_from_tags(const std::vector<ScenarioSequence>& corpus);

/// Per stage index, dimensions ordered by how often the model chose the
/// option expressing them (valid choices on tagged stages); untagged
/// dimensions rank last, ties resolve in canonical order.
std::vector<std::optional<MftRanking>> mft_rankings_from_choices(const std::vector<ScenarioSequence>& corpus,
                                                                 const std::vector<ChoiceTrajectory>& trajectories);

}  // namespace alignaudit::dilemma
