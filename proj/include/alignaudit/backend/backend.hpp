#pragma once

#include "alignaudit/metrics/prob_dist.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace alignaudit::backend {

struct GenerationConfig {
    double temperature = 0.0;
    int max_tokens = 64;
    int sample_width = 1;  // beam or sample width
    std::optional<std::uint64_t> seed;

    friend bool operator==(const GenerationConfig&, const GenerationConfig&) = default;
};

/// One prompt submitted to a backend.
///
/// `context_key` and `option_tokens` are metadata, not prompt text. Remote
/// services ignore the context key; the toy model uses it to select a logit
/// row and uses the option tokens as its answer vocabulary.
struct Request {
    std::string prompt;
    GenerationConfig config;
    std::string context_key;
    std::vector<std::string> option_tokens;
    bool want_logprobs = false;
};

struct Completion {
    std::string text;
    // Log-probabilities of candidate first tokens; every value is <= 0.
    std::optional<std::map<std::string, double>> first_token_logprobs;
    std::string backend_id;
    bool cached = false;
    // Raw service payload kept for the audit trail (empty for local backends).
    std::string raw;

    friend bool operator==(const Completion&, const Completion&) = default;
};

class Backend {
public:
    virtual ~Backend() = default;

    virtual std::string id() const = 0;
    virtual std::string model() const { return id(); }
    virtual bool supports_logprobs() const { return false; }
    // Upper bound on simultaneous in-flight requests.
    virtual std::size_t max_concurrency() const { return 1; }

    virtual Completion complete(const Request& request) = 0;
};

Completion complete(Backend& backend, const std::string& prompt, const GenerationConfig& config);

/// Option token as compared against first-token log-probabilities: leading
/// whitespace is insignificant (" A" and "A" name the same option).
std::string normalize_option_token(const std::string& token);

/// Restricts first-token log-probabilities to `option_tokens` and
/// renormalizes. Tokens differing only by leading whitespace are merged.
/// Throws UnsupportedCapabilityError when the completion has no
/// log-probabilities and CoverageError when an option is missing (all
/// options when `allow_partial` is set).
metrics::ProbDist restrict_first_token(const Completion& completion,
                                       const std::vector<std::string>& option_tokens,
                                       bool allow_partial = false);

/// Queries the backend at temperature 0 for a single token and returns its
/// first-token distribution over `option_tokens`.
metrics::ProbDist first_token_distribution(Backend& backend, const std::string& prompt,
                                           const std::vector<std::string>& option_tokens,
                                           const std::string& context_key = {},
                                           bool allow_partial = false);

}  // namespace alignaudit::backend
