#pragma once

#include <nlohmann/json.hpp>

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace alignaudit::dilemma {

enum class ValuePair { TruthVsLoyalty, IndividualVsCommunity, ShortVsLongTerm, JusticeVsMercy };
inline constexpr std::array kValuePairs{ValuePair::TruthVsLoyalty, ValuePair::IndividualVsCommunity,
                                        ValuePair::ShortVsLongTerm, ValuePair::JusticeVsMercy};

enum class MftDimension { Care, Fairness, Loyalty, Authority, Sanctity };
inline constexpr std::array kMftDimensions{MftDimension::Care, MftDimension::Fairness, MftDimension::Loyalty,
                                           MftDimension::Authority, MftDimension::Sanctity};

enum class Choice { A, B, Invalid };

std::string to_string(ValuePair v);
std::string to_string(MftDimension d);
std::string to_string(Choice c);
ValuePair parse_value_pair(const std::string& s);
MftDimension parse_mft_dimension(const std::string& s);
/// Pole names; option A always carries the first pole.
std::pair<std::string, std::string> poles(ValuePair v);

struct MftTag {
    MftDimension dimension = MftDimension::Care;
    int rank = 1;             // salience, 1 = most salient
    Choice pole = Choice::A;  // the option that expresses this dimension
};

struct Stage {
    int escalation = 1;
    std::string narrative;
    std::string option_a;  // first pole of the value pair
    std::string option_b;
    // Alternative framing in which Action A has a negative and Action B a
    // positive outcome.
    std::optional<std::string> consequence_variant;
};

inline constexpr int kCorpusSchemaVersion = 1;

struct ScenarioSequence {
    std::string id;
    ValuePair value_pair = ValuePair::TruthVsLoyalty;
    std::string shape;  // escalation shape label
    std::vector<Stage> stages;
    std::map<std::size_t, std::vector<MftTag>> mft_tags;  // stage index -> tags
};

/// Throws ConfigError: no stages, non-increasing escalation, empty options,
/// tags on missing stages.
void validate(const ScenarioSequence& s);

nlohmann::json to_json(const ScenarioSequence& s);
ScenarioSequence sequence_from_json(const nlohmann::json& j);

/// JSONL corpus; every line must carry `schema_version`.
std::vector<ScenarioSequence> load_corpus(const std::string& path);
std::string corpus_jsonl(const std::vector<ScenarioSequence>& corpus);

/// The bundled offline corpus: two sequences for each value pair and each of
/// the three escalation shapes (gradual and steep with three stages,
/// extended with five), 24 in total. Care is tagged most salient at every
/// stage; the other dimensions rotate with the shape.
std::vector<ScenarioSequence> synthetic_corpus();

}  // namespace alignaudit::dilemma
