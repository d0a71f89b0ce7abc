#include "alignaudit/mark/type_dynamics.hpp"

#include "alignaudit/common/error.hpp"
#include "alignaudit/common/hash.hpp"
#include "alignaudit/common/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <set>

namespace alignaudit::mark {

const std::vector<std::string>& all_type_codes() {
    static const std::vector<std::string> codes{"ISTJ", "ISFJ", "INFJ", "INTJ", "ISTP", "ISFP", "INFP", "INTP",
                                                "ESTP", "ESFP", "ENFP", "ENTP", "ESTJ", "ESFJ", "ENFJ", "ENTJ"};
    return codes;
}

bool is_type_code(const std::string& code) {
    const auto& codes = all_type_codes();
    return std::find(codes.begin(), codes.end(), code) != codes.end();
}

TypeDynamics TypeDynamics::parse(const std::string& json_text, const std::string& source) {
    static const std::set<std::string> kFunctions{"Ni", "Ne", "Si", "Se", "Ti", "Te", "Fi", "Fe"};
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(source + ": " + e.what());
    }
    if (!j.contains("types") || !j["types"].is_object()) throw ConfigError(source + ": missing \"types\" object");
    TypeDynamics out;
    for (const auto& [code, stack] : j["types"].items()) {
        if (!is_type_code(code)) throw ConfigError(source + ": unknown type code '" + code + "'");
        if (!stack.is_array() || stack.size() != 4) throw ConfigError(source + ": " + code + " needs four functions");
        FunctionStack fs;
        std::set<std::string> seen;
        for (std::size_t i = 0; i < 4; ++i) {
            fs[i] = stack[i].get<std::string>();
            if (!kFunctions.count(fs[i]) || !seen.insert(fs[i]).second) {
                throw ConfigError(source + ": " + code + " has an invalid function stack");
            }
        }
        out.table_[code] = fs;
    }
    if (out.table_.size() != all_type_codes().size()) {
        throw ConfigError(source + ": expected 16 types, found " + std::to_string(out.table_.size()));
    }
    nlohmann::json canonical = nlohmann::json::object();
    for (const auto& [code, fs] : out.table_) canonical[code] = fs;
    out.digest_ = sha256_hex(canonical.dump());
    return out;
}

TypeDynamics TypeDynamics::load(const std::string& path) { return parse(read_file(path), path); }

const TypeDynamics& TypeDynamics::bundled() {
    static const TypeDynamics table = load(std::string(ALIGNAUDIT_DATA_DIR) + "/mark/mbti_type_dynamics.json");
    return table;
}

MbtiType TypeDynamics::resolve(const std::string& code) const {
    auto it = table_.find(code);
    if (it == table_.end()) throw ParseError("'" + code + "' is not one of the 16 types");
    return {code, it->second};
}

std::optional<std::string> find_type_code(const std::string& text) {
    auto is_alpha = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; };
    for (std::size_t i = 0; i + 4 <= text.size(); ++i) {
        if (i > 0 && is_alpha(text[i - 1])) continue;
        if (i + 4 < text.size() && is_alpha(text[i + 4])) continue;
        std::string cand = text.substr(i, 4);
        for (char& c : cand) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        if (is_type_code(cand)) return cand;
    }
    return std::nullopt;
}

std::string describe_stack(const FunctionStack& stack) {
    return join(std::vector<std::string>(stack.begin(), stack.end()), ", ");
}

}  // namespace alignaudit::mark
