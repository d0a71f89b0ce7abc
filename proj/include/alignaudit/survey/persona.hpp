#pragma once

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace alignaudit::survey {

enum class Gender { Male, Female };
enum class AgeGroup { Under29, Age30To49, Age50Plus };
enum class Culture { US, CN };

inline constexpr std::array kGenders{Gender::Male, Gender::Female};
inline constexpr std::array kAgeGroups{AgeGroup::Under29, AgeGroup::Age30To49, AgeGroup::Age50Plus};
inline constexpr std::array kCultures{Culture::US, Culture::CN};

std::string to_string(Gender g);
std::string to_string(AgeGroup a);
std::string to_string(Culture c);
Gender parse_gender(const std::string& s);
AgeGroup parse_age_group(const std::string& s);
Culture parse_culture(const std::string& s);
// Lenient parsers used on model output; nullopt when unrecognized.
std::optional<Gender> read_gender(const std::string& s);
std::optional<AgeGroup> read_age_group(const std::string& s);
std::optional<Culture> read_culture(const std::string& s);
AgeGroup age_group_for_years(int years);

struct PersonaProfile {
    Gender gender = Gender::Male;
    AgeGroup age_group = AgeGroup::Under29;
    std::string location;
    Culture culture = Culture::US;
    std::map<std::string, std::string> extra;

    /// One-line natural-language description used in prompts.
    std::string describe() const;
    /// "gender|age_group" demographic cell identifier.
    std::string cell() const;

    friend bool operator==(const PersonaProfile&, const PersonaProfile&) = default;
};

nlohmann::json to_json(const PersonaProfile& p);
PersonaProfile persona_from_json(const nlohmann::json& j);

/// Target proportions per demographic axis, indexed like kGenders,
/// kAgeGroups and kCultures.
struct PersonaMarginals {
    std::array<double, 2> gender{0.5, 0.5};
    std::array<double, 3> age{1.0 / 3, 1.0 / 3, 1.0 / 3};
    std::array<double, 2> culture{1.0, 0.0};
};

/// Largest-remainder apportionment of `count` items over `weights`; ties in
/// the remainder go to the lower index.
std::vector<std::size_t> largest_remainder(const std::vector<double>& weights, std::size_t count);

/// Deterministic persona panel whose per-axis counts are the
/// largest-remainder allocations of the targets, so realized proportions lie
/// within 1/count of each target. Joint cells are filled by controlled
/// rounding of the independent product, and the panel order is shuffled by
/// `seed`. Locations, when a pool is given, are drawn with the same seed.
/// Throws ConfigError naming the axis whose targets are invalid.
std::vector<PersonaProfile> generate_personas(const PersonaMarginals& marginals, std::size_t count,
                                              std::uint64_t seed,
                                              const std::vector<std::string>& location_pool = {});

}  // namespace alignaudit::survey
