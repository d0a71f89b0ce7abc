#pragma once

#include "alignaudit/backend/backend.hpp"
#include "alignaudit/common/error.hpp"
#include "alignaudit/dilemma/scenario.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace alignaudit::dilemma {

/// Leading option letter ("A.", "(B)", "A because ..."), then an explicit
/// "Action A/B" phrase, then a verbatim echo of exactly one option text.
/// Anything else is Invalid.
Choice parse_choice(const std::string& completion, const std::string& option_a, const std::string& option_b);

/// Prompt wordings of the same dilemma. Placeholders: {history}, {stage},
/// {narrative}, {option_a}, {option_b}, {consequences}.
const std::vector<std::string>& default_variants();

/// Line marker introducing the consequence framing inside a prompt.
inline constexpr const char* kConsequenceMarker = "Consequences:";
/// Line marker introducing a previously made decision in carried history.
inline constexpr const char* kHistoryMarker = "Earlier you chose";

struct TrajectoryEntry {
    std::size_t stage = 0;
    std::size_t variant = 0;
    Choice choice = Choice::Invalid;
    std::string prompt;
    std::string completion;

    friend bool operator==(const TrajectoryEntry&, const TrajectoryEntry&) = default;
};

struct ChoiceTrajectory {
    std::string sequence_id;
    ValuePair value_pair = ValuePair::TruthVsLoyalty;
    bool consequence = false;
    std::vector<TrajectoryEntry> entries;  // stage-major, then variant

    Choice choice(std::size_t stage, std::size_t variant) const;
    friend bool operator==(const ChoiceTrajectory&, const ChoiceTrajectory&) = default;
};

nlohmann::json to_json(const ChoiceTrajectory& t);
ChoiceTrajectory trajectory_from_json(const nlohmann::json& j);

struct RunSequenceOptions {
    bool carry_history = true;
    bool consequence = false;  // present the A-negative/B-positive framing
    backend::GenerationConfig generation{};
};

/// Raised when the backend fails mid-sequence; carries the entries completed
/// so far.
class PartialTrajectoryError : public BackendError {
public:
    PartialTrajectoryError(const std::string& what, ChoiceTrajectory partial)
        : BackendError(what, false), partial_(std::move(partial)) {}
    const ChoiceTrajectory& partial() const noexcept { return partial_; }

private:
    ChoiceTrajectory partial_;
};

/// Runs every stage under every prompt variant. With carry_history each
/// stage prompt for a variant includes the earlier stages and the model's
/// own earlier answers under that variant, so stages run strictly in order.
ChoiceTrajectory run_sequence(backend::Backend& backend, const ScenarioSequence& seq,
                              const std::vector<std::string>& variants, const RunSequenceOptions& options = {});

}  // namespace alignaudit::dilemma
