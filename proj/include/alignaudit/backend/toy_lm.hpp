#pragma once

#include "alignaudit/backend/backend.hpp"
#include "alignaudit/metrics/prob_dist.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace alignaudit::backend {

/// Trainable categorical "language model": one logit row per context key,
/// one column per option label. The first-token distribution of a context is
/// exactly softmax(row).
class ToyCategoricalLM {
public:
    ToyCategoricalLM() = default;
    ToyCategoricalLM(std::vector<std::string> contexts, std::vector<std::string> options,
                     std::vector<std::vector<double>> logits);

    static ToyCategoricalLM zeros(std::vector<std::string> contexts, std::vector<std::string> options);
    /// Rows set to log-masses of the given distributions, so each context
    /// reproduces its target. Zero-mass options get a very negative logit.
    static ToyCategoricalLM from_distributions(const std::map<std::string, metrics::ProbDist>& targets);

    const std::vector<std::string>& contexts() const noexcept { return contexts_; }
    const std::vector<std::string>& options() const noexcept { return options_; }
    const std::vector<std::vector<double>>& logits() const noexcept { return logits_; }
    std::vector<std::vector<double>>& mutable_logits() noexcept { return logits_; }

    std::optional<std::size_t> find(const std::string& context) const;
    std::size_t require(const std::string& context) const;  // throws StructuralError
    metrics::ProbDist distribution(const std::string& context) const;

    nlohmann::json to_json() const;
    static ToyCategoricalLM from_json(const nlohmann::json& j);
    void save(const std::string& path) const;
    static ToyCategoricalLM load(const std::string& path);

private:
    void index();

    std::vector<std::string> contexts_;
    std::vector<std::string> options_;
    std::vector<std::vector<double>> logits_;
    std::unordered_map<std::string, std::size_t> by_context_;
};

/// Serves a frozen ToyCategoricalLM through the Backend interface.
///
/// Context keys are '|'-separated; a key absent from the model backs off by
/// dropping trailing segments ("q1|US|male" -> "q1|US" -> "q1"). A resolved
/// row is restricted to the request's option tokens. Unknown contexts with option tokens get
/// pseudo-logits derived from a SHA-256 of the prompt. Requests with neither
/// return a deterministic free-text token. Temperature 0 decodes greedily;
/// otherwise one option is sampled with a seed mixed from config.seed and
/// the prompt.
class ToyBackend : public Backend {
public:
    explicit ToyBackend(std::shared_ptr<const ToyCategoricalLM> model, std::string name = "toy");

    std::string id() const override { return name_; }
    bool supports_logprobs() const override { return true; }
    std::size_t max_concurrency() const override { return 8; }
    Completion complete(const Request& request) override;

    const ToyCategoricalLM& lm() const noexcept { return *model_; }

private:
    std::shared_ptr<const ToyCategoricalLM> model_;
    std::string name_;
};

}  // namespace alignaudit::backend
