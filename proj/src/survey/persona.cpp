#include "alignaudit/survey/persona.hpp"

#include "alignaudit/common/error.hpp"
#include "alignaudit/common/hash.hpp"
#include "alignaudit/common/text.hpp"

#include <algorithm>
#include <functional>
#include <cmath>
#include <numeric>
#include <regex>

namespace alignaudit::survey {

std::string to_string(Gender g) { return g == Gender::Male ? "male" : "female"; }

std::string to_string(AgeGroup a) {
    switch (a) {
        case AgeGroup::Under29: return "under_29";
        case AgeGroup::Age30To49: return "30_49";
        case AgeGroup::Age50Plus: return "50_plus";
    }
    return "?";
}

std::string to_string(Culture c) { return c == Culture::US ? "US" : "CN"; }

std::optional<Gender> read_gender(const std::string& s) {
    auto v = to_lower(trim(s));
    if (v == "male" || v == "man" || v == "m") return Gender::Male;
    if (v == "female" || v == "woman" || v == "f") return Gender::Female;
    return std::nullopt;
}

std::optional<AgeGroup> read_age_group(const std::string& s) {
    auto v = to_lower(trim(s));
    if (v == "under_29" || v == "under 29" || v == "under-29" || v == "<30" || v == "18_29" || v == "18-29") {
        return AgeGroup::Under29;
    }
    if (v == "30_49" || v == "30-49" || v == "30 to 49") return AgeGroup::Age30To49;
    if (v == "50_plus" || v == "50+" || v == "50 plus" || v == "50-plus") return AgeGroup::Age50Plus;
    static const std::regex years(R"(^(\d{1,3})( years?( old)?)?$)");
    std::smatch m;
    if (std::regex_match(v, m, years)) return age_group_for_years(std::stoi(m[1].str()));
    return std::nullopt;
}

std::optional<Culture> read_culture(const std::string& s) {
    auto v = to_lower(trim(s));
    if (v == "us" || v == "usa" || v == "united states" || v == "american" || v == "u.s.") return Culture::US;
    if (v == "cn" || v == "china" || v == "chinese") return Culture::CN;
    return std::nullopt;
}

Gender parse_gender(const std::string& s) {
    if (auto g = read_gender(s)) return *g;
    throw ConfigError("unknown gender '" + s + "' (expected male|female)");
}

AgeGroup parse_age_group(const std::string& s) {
    auto v = trim(s);
    if (v == "under_29") return AgeGroup::Under29;
    if (v == "30_49") return AgeGroup::Age30To49;
    if (v == "50_plus") return AgeGroup::Age50Plus;
    throw ConfigError("unknown age_group '" + s + "' (expected under_29|30_49|50_plus)");
}

Culture parse_culture(const std::string& s) {
    auto v = trim(s);
    if (v == "US") return Culture::US;
    if (v == "CN") return Culture::CN;
    throw ConfigError("unknown culture '" + s + "' (expected US|CN)");
}

AgeGroup age_group_for_years(int years) {
    if (years < 30) return AgeGroup::Under29;
    if (years < 50) return AgeGroup::Age30To49;
    return AgeGroup::Age50Plus;
}

std::string PersonaProfile::describe() const {
    static const std::map<AgeGroup, std::string> kAgeText{{AgeGroup::Under29, "under 29 years old"},
                                                          {AgeGroup::Age30To49, "between 30 and 49 years old"},
                                                          {AgeGroup::Age50Plus, "50 years old or older"}};
    std::string out = "a " + to_string(gender) + " respondent " + kAgeText.at(age_group) + " from " +
                      (culture == Culture::US ? "the United States" : "China");
    if (!location.empty()) out += ", living in " + location;
    for (const auto& [k, v] : extra) out += "; " + k + ": " + v;
    return out;
}

std::string PersonaProfile::cell() const { return to_string(gender) + "|" + to_string(age_group); }

nlohmann::json to_json(const PersonaProfile& p) {
    return {{"gender", to_string(p.gender)},
            {"age_group", to_string(p.age_group)},
            {"location", p.location},
            {"culture", to_string(p.culture)},
            {"extra", p.extra}};
}

PersonaProfile persona_from_json(const nlohmann::json& j) {
    PersonaProfile p;
    p.gender = parse_gender(j.at("gender").get<std::string>());
    p.age_group = parse_age_group(j.at("age_group").get<std::string>());
    p.location = j.value("location", std::string{});
    p.culture = parse_culture(j.at("culture").get<std::string>());
    if (j.contains("extra")) p.extra = j["extra"].get<std::map<std::string, std::string>>();
    return p;
}

std::vector<std::size_t> largest_remainder(const std::vector<double>& weights, std::size_t count) {
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    std::vector<std::size_t> out(weights.size(), 0);
    if (weights.empty() || total <= 0.0) return out;
    std::vector<double> rem(weights.size());
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        double quota = weights[i] / total * static_cast<double>(count);
        // Snap quotas that are integers up to rounding noise.
        double rounded = std::round(quota);
        if (std::abs(quota - rounded) < 1e-9) quota = rounded;
        out[i] = static_cast<std::size_t>(std::floor(quota));
        rem[i] = quota - std::floor(quota);
        assigned += out[i];
    }
    std::vector<std::size_t> order(weights.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
    for (std::size_t k = 0; assigned < count; ++k, ++assigned) ++out[order[k % order.size()]];
    return out;
}

namespace {

void validate_axis(const char* name, const double* w, std::size_t n) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(w[i]) || w[i] < 0.0) {
            throw ConfigError(std::string("persona marginals: axis '") + name + "' has a negative or non-finite target");
        }
        total += w[i];
    }
    if (std::abs(total - 1.0) > 1e-6) {
        throw ConfigError(std::string("persona marginals: axis '") + name + "' sums to " + format_fixed(total, 6) +
                          ", expected 1");
    }
}

// Integer table with the given row and column sums whose entries are floor or
// ceil of target[i][j], found by augmenting paths on the fractional residue.
std::vector<std::vector<std::size_t>> controlled_round(const std::vector<std::vector<double>>& target,
                                                       const std::vector<std::size_t>& row_sums,
                                                       const std::vector<std::size_t>& col_sums) {
    const std::size_t rows = target.size(), cols = col_sums.size();
    std::vector<std::vector<std::size_t>> out(rows, std::vector<std::size_t>(cols));
    std::vector<std::vector<double>> frac(rows, std::vector<double>(cols));
    std::vector<long> row_need(rows), col_need(cols);
    for (std::size_t i = 0; i < rows; ++i) {
        row_need[i] = static_cast<long>(row_sums[i]);
        for (std::size_t j = 0; j < cols; ++j) {
            double t = target[i][j];
            double r = std::round(t);
            if (std::abs(t - r) < 1e-9) t = r;
            out[i][j] = static_cast<std::size_t>(std::floor(t));
            frac[i][j] = t - std::floor(t);
            row_need[i] -= static_cast<long>(out[i][j]);
        }
    }
    for (std::size_t j = 0; j < cols; ++j) {
        col_need[j] = static_cast<long>(col_sums[j]);
        for (std::size_t i = 0; i < rows; ++i) col_need[j] -= static_cast<long>(out[i][j]);
    }
    // Residual 0/1 transport problem: each cell may take one extra unit when
    // its target was fractional. Edges are tried by decreasing remainder.
    std::vector<std::vector<bool>> extra(rows, std::vector<bool>(cols, false));
    std::vector<std::vector<std::size_t>> order(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        order[i].resize(cols);
        std::iota(order[i].begin(), order[i].end(), 0);
        std::stable_sort(order[i].begin(), order[i].end(),
                         [&](std::size_t a, std::size_t b) { return frac[i][a] > frac[i][b]; });
    }
    std::vector<long> col_used(cols, 0);
    std::vector<bool> seen;
    // DFS along alternating paths: row -> unused fractional col, col -> row holding it.
    std::function<bool(std::size_t)> augment = [&](std::size_t i) -> bool {
        for (std::size_t j : order[i]) {
            if (frac[i][j] <= 0.0 || extra[i][j] || seen[j]) continue;
            seen[j] = true;
            if (col_used[j] < col_need[j]) {
                extra[i][j] = true;
                ++col_used[j];
                return true;
            }
            for (std::size_t k = 0; k < rows; ++k) {
                if (extra[k][j] && augment(k)) {
                    extra[k][j] = false;
                    extra[i][j] = true;
                    return true;
                }
            }
        }
        return false;
    };
    for (std::size_t i = 0; i < rows; ++i) {
        for (long u = 0; u < row_need[i]; ++u) {
            seen.assign(cols, false);
            if (!augment(i)) throw ConfigError("persona marginals: joint allocation is infeasible");
        }
    }
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) out[i][j] += extra[i][j] ? 1 : 0;
    }
    return out;
}

}  // namespace

std::vector<PersonaProfile> generate_personas(const PersonaMarginals& marginals, std::size_t count,
                                              std::uint64_t seed, const std::vector<std::string>& location_pool) {
    if (count == 0) throw ConfigError("generate_personas: count must be >= 1");
    validate_axis("gender", marginals.gender.data(), marginals.gender.size());
    validate_axis("age_group", marginals.age.data(), marginals.age.size());
    validate_axis("culture", marginals.culture.data(), marginals.culture.size());

    const double n = static_cast<double>(count);
    auto g_counts = largest_remainder({marginals.gender.begin(), marginals.gender.end()}, count);
    auto a_counts = largest_remainder({marginals.age.begin(), marginals.age.end()}, count);
    auto c_counts = largest_remainder({marginals.culture.begin(), marginals.culture.end()}, count);

    // gender x age
    std::vector<std::vector<double>> ga_target(2, std::vector<double>(3));
    for (std::size_t g = 0; g < 2; ++g) {
        for (std::size_t a = 0; a < 3; ++a) ga_target[g][a] = n * marginals.gender[g] * marginals.age[a];
    }
    auto ga = controlled_round(ga_target, g_counts, a_counts);

    // (gender, age) cell x culture
    std::vector<std::vector<double>> cc_target;
    std::vector<std::size_t> cell_counts;
    for (std::size_t g = 0; g < 2; ++g) {
        for (std::size_t a = 0; a < 3; ++a) {
            cell_counts.push_back(ga[g][a]);
            cc_target.push_back({ga[g][a] * marginals.culture[0], ga[g][a] * marginals.culture[1]});
        }
    }
    auto cc = controlled_round(cc_target, cell_counts, c_counts);

    std::vector<PersonaProfile> panel;
    panel.reserve(count);
    for (std::size_t cell = 0; cell < cc.size(); ++cell) {
        for (std::size_t c = 0; c < 2; ++c) {
            for (std::size_t k = 0; k < cc[cell][c]; ++k) {
                PersonaProfile p;
                p.gender = kGenders[cell / 3];
                p.age_group = kAgeGroups[cell % 3];
                p.culture = kCultures[c];
                panel.push_back(std::move(p));
            }
        }
    }
    // Fisher-Yates with the portable generator.
    std::uint64_t state = mix_seed(seed, 0x7065727361ULL);
    for (std::size_t i = panel.size(); i > 1; --i) {
        state = splitmix64(state);
        std::swap(panel[i - 1], panel[state % i]);
    }
    if (!location_pool.empty()) {
        for (auto& p : panel) {
            state = splitmix64(state);
            p.location = location_pool[state % location_pool.size()];
        }
    }
    return panel;
}

}  // namespace alignaudit::survey
