#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace alignaudit::mark {

using FunctionStack = std::array<std::string, 4>;  // dominant, auxiliary, tertiary, inferior

struct MbtiType {
    std::string code;
    FunctionStack function_stack;

    friend bool operator==(const MbtiType&, const MbtiType&) = default;
};

/// The 16 four-letter codes in canonical order (ISTJ ... ENTJ).
const std::vector<std::string>& all_type_codes();
bool is_type_code(const std::string& code);

/// Type-dynamics table mapping each of the 16 codes to its function stack.
class TypeDynamics {
public:
    /// Parses {"types": {"ISTJ": ["Si","Te","Fi","Ne"], ...}}. Throws
    /// ConfigError unless exactly the 16 codes are present, each with four
    /// distinct functions from {Ni,Ne,Si,Se,Ti,Te,Fi,Fe}.
    static TypeDynamics load(const std::string& path);
    static TypeDynamics parse(const std::string& json_text, const std::string& source = "<memory>");
    /// The table shipped in the data directory.
    static const TypeDynamics& bundled();

    MbtiType resolve(const std::string& code) const;  // throws ParseError on unknown codes
    const std::map<std::string, FunctionStack>& table() const noexcept { return table_; }
    const std::string& digest() const noexcept { return digest_; }

private:
    std::map<std::string, FunctionStack> table_;
    std::string digest_;
};

/// First standalone 16-type code in `text` (case-insensitive, delimited by
/// non-letters), if any.
std::optional<std::string> find_type_code(const std::string& text);

std::string describe_stack(const FunctionStack& stack);  // "Ni, Te, Fi, Se"

}  // namespace alignaudit::mark
