#include "alignaudit/backend/backend.hpp"

#include "alignaudit/common/error.hpp"
#include "alignaudit/common/text.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace alignaudit::backend {

Completion complete(Backend& backend, const std::string& prompt, const GenerationConfig& config) {
    Request req;
    req.prompt = prompt;
    req.config = config;
    return backend.complete(req);
}

std::string normalize_option_token(const std::string& token) {
    auto pos = token.find_first_not_of(" \t\n\xc4\xa0");
    return pos == std::string::npos ? std::string{} : token.substr(pos);
}

metrics::ProbDist restrict_first_token(const Completion& completion,
                                       const std::vector<std::string>& option_tokens,
                                       bool allow_partial) {
    if (option_tokens.empty()) throw StructuralError("first_token_distribution: no option tokens");
    std::vector<std::string> labels;
    for (const auto& t : option_tokens) labels.push_back(normalize_option_token(t));
    if (std::set<std::string>(labels.begin(), labels.end()).size() != labels.size()) {
        throw StructuralError("first_token_distribution: option tokens are not distinct");
    }
    if (!completion.first_token_logprobs) {
        throw UnsupportedCapabilityError("backend " + completion.backend_id + " returned no log-probabilities");
    }
    const auto& lp = *completion.first_token_logprobs;

    constexpr double kNegInf = -std::numeric_limits<double>::infinity();
    std::vector<double> logit(labels.size(), kNegInf);
    for (const auto& [token, value] : lp) {
        auto it = std::find(labels.begin(), labels.end(), normalize_option_token(token));
        if (it == labels.end()) continue;
        double& slot = logit[static_cast<std::size_t>(it - labels.begin())];
        // log-sum-exp merge of " A" and "A"
        double hi = std::max(slot, value);
        slot = hi + std::log(std::exp(slot - hi) + std::exp(value - hi));
    }

    std::vector<std::string> missing;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (logit[i] == kNegInf) missing.push_back(labels[i]);
    }
    if (!missing.empty() && (!allow_partial || missing.size() == labels.size())) {
        std::vector<std::string> seen;
        for (const auto& [token, value] : lp) seen.push_back("'" + token + "'");
        throw CoverageError("first-token log-probabilities do not cover options: " + join(missing, ", "),
                            "returned tokens: " + join(seen, ", "));
    }
    double hi = *std::max_element(logit.begin(), logit.end());
    std::vector<double> mass(labels.size(), 0.0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (logit[i] != kNegInf) mass[i] = std::exp(logit[i] - hi);
    }
    return metrics::ProbDist(std::move(labels), std::move(mass));
}

metrics::ProbDist first_token_distribution(Backend& backend, const std::string& prompt,
                                           const std::vector<std::string>& option_tokens,
                                           const std::string& context_key, bool allow_partial) {
    if (!backend.supports_logprobs()) {
        throw UnsupportedCapabilityError("backend " + backend.id() + " does not expose log-probabilities");
    }
    Request req;
    req.prompt = prompt;
    req.config.temperature = 0.0;
    req.config.max_tokens = 1;
    req.context_key = context_key;
    req.option_tokens = option_tokens;
    req.want_logprobs = true;
    return restrict_first_token(backend.complete(req), option_tokens, allow_partial);
}

}  // namespace alignaudit::backend
