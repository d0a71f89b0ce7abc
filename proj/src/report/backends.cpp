#include "alignaudit/report/backends.hpp"

#include "alignaudit/backend/cache.hpp"
#include "alignaudit/backend/remote.hpp"
#include "alignaudit/backend/scripted.hpp"
#include "alignaudit/backend/toy_lm.hpp"
#include "alignaudit/common/error.hpp"
#include "alignaudit/common/hash.hpp"
#include "alignaudit/common/text.hpp"
#include "alignaudit/dilemma/runner.hpp"
#include "alignaudit/metrics/prob_dist.hpp"

#include <atomic>
#include <cmath>
#include <sstream>

namespace alignaudit::report {

namespace {

std::string without_consequences(const std::string& prompt) {
    std::istringstream in(prompt);
    std::string line, out;
    while (std::getline(in, line)) {
        if (line.find(dilemma::kConsequenceMarker) != std::string::npos) continue;
        out += line + "\n";
    }
    return out;
}

class FailingBackend : public backend::Backend {
public:
    FailingBackend(std::shared_ptr<backend::Backend> inner, std::size_t healthy)
        : inner_(std::move(inner)), healthy_(healthy) {}
    std::string id() const override { return inner_->id(); }
    std::string model() const override { return inner_->model(); }
    bool supports_logprobs() const override { return inner_->supports_logprobs(); }
    std::size_t max_concurrency() const override { return inner_->max_concurrency(); }
    backend::Completion complete(const backend::Request& request) override {
        if (calls_.fetch_add(1) >= healthy_) throw BackendError("simulated outage", true);
        return inner_->complete(request);
    }

private:
    std::shared_ptr<backend::Backend> inner_;
    std::size_t healthy_;
    std::atomic<std::size_t> calls_{0};
};

}  // namespace

std::vector<std::string> scripted_behaviours() {
    return {"always:<X>", "consequence-following", "consequence-insensitive", "history-sensitive", "invalid"};
}

std::shared_ptr<backend::Backend> scripted_behaviour(const std::string& behaviour) {
    using backend::Request;
    const std::string name = "scripted:" + behaviour;
    if (behaviour.rfind("always:", 0) == 0) {
        return backend::ScriptedBackend::constant(name, behaviour.substr(7));
    }
    if (behaviour == "consequence-following") {
        return std::make_shared<backend::ScriptedBackend>(name, [](const Request& r, std::size_t) {
            return r.prompt.find(dilemma::kConsequenceMarker) != std::string::npos ? std::string("B")
                                                                                    : std::string("A");
        });
    }
    if (behaviour == "consequence-insensitive") {
        return std::make_shared<backend::ScriptedBackend>(name, [](const Request& r, std::size_t) {
            return (string_seed(without_consequences(r.prompt)) & 1U) ? std::string("B") : std::string("A");
        });
    }
    if (behaviour == "history-sensitive") {
        return std::make_shared<backend::ScriptedBackend>(name, [](const Request& r, std::size_t) {
            return r.prompt.find(dilemma::kHistoryMarker) != std::string::npos ? std::string("B")
                                                                                : std::string("A");
        });
    }
    if (behaviour == "invalid") return backend::ScriptedBackend::constant(name, "I cannot decide.");
    throw ConfigError("unknown scripted behaviour '" + behaviour + "' (known: " + join(scripted_behaviours(), ", ") +
                      ")");
}

std::shared_ptr<backend::Backend> human_mirror_backend(const survey::HumanDataset& human,
                                                       const std::vector<survey::SurveyQuestion>& questions) {
    std::size_t width = 0;
    for (const auto& q : questions) width = std::max(width, q.options.size());
    if (width == 0) throw ConfigError("human-mirror: no questions");
    auto options = metrics::letter_labels(width);
    std::vector<std::string> contexts;
    std::vector<std::vector<double>> logits;
    for (const auto& row : human.rows()) {
        if (row.gender.has_value() != row.age_group.has_value()) continue;
        std::string key = row.question_id + "|" + survey::to_string(row.culture);
        if (row.gender) key += "|" + survey::to_string(*row.gender) + "|" + survey::to_string(*row.age_group);
        std::vector<double> z(width, -700.0);
        for (std::size_t i = 0; i < row.dist.size(); ++i) {
            if (row.dist[i] > 0.0) z[i] = std::log(row.dist[i]);
        }
        contexts.push_back(std::move(key));
        logits.push_back(std::move(z));
    }
    auto lm = std::make_shared<backend::ToyCategoricalLM>(std::move(contexts), std::move(options), std::move(logits));
    return std::make_shared<backend::ToyBackend>(lm, "human-mirror");
}

std::shared_ptr<backend::Backend> make_backend(const RunConfig& config) {
    const auto& b = config.section("backend");
    const std::string kind = get_or<std::string>(b, "kind", "toy");
    std::shared_ptr<backend::Backend> out;
    if (kind == "toy") {
        std::shared_ptr<const backend::ToyCategoricalLM> lm;
        const std::string model = get_or<std::string>(b, "model", "");
        if (model.empty()) {
            lm = std::make_shared<backend::ToyCategoricalLM>(std::vector<std::string>{},
                                                             std::vector<std::string>{"A"},
                                                             std::vector<std::vector<double>>{});
        } else {
            lm = std::make_shared<backend::ToyCategoricalLM>(backend::ToyCategoricalLM::load(config.resolve(model)));
        }
        out = std::make_shared<backend::ToyBackend>(lm, get_or<std::string>(b, "name", "toy"));
    } else if (kind == "human-mirror") {
        const auto& s = config.section("survey");
        auto questions = survey::load_questions(config.resolve(get_or<std::string>(s, "questions", "")));
        auto human = survey::load_human_distributions(config.resolve(get_or<std::string>(s, "human", "")), questions);
        out = human_mirror_backend(human, questions);
    } else if (kind == "scripted") {
        out = scripted_behaviour(get_or<std::string>(b, "script", ""));
    } else if (kind == "remote") {
        backend::RemoteConfig rc;
        rc.base_url = get_or<std::string>(b, "base_url", "");
        rc.model = get_or<std::string>(b, "model", "");
        if (rc.base_url.empty() || rc.model.empty()) throw ConfigError("backend: remote needs base_url and model");
        rc.api_key_env = get_or<std::string>(b, "api_key_env", rc.api_key_env);
        rc.max_attempts = get_or<int>(b, "max_attempts", rc.max_attempts);
        rc.top_logprobs = get_or<int>(b, "top_logprobs", rc.top_logprobs);
        rc.timeout = std::chrono::seconds(get_or<int>(b, "timeout_s", static_cast<int>(rc.timeout.count())));
        rc.max_concurrency = get_or<std::size_t>(b, "max_concurrency", rc.max_concurrency);
        rc.requests_per_second = get_or<double>(b, "requests_per_second", rc.requests_per_second);
        rc.burst = get_or<double>(b, "burst", rc.burst);
        out = std::make_shared<backend::RemoteBackend>(rc);
    } else {
        throw ConfigError("backend: unknown kind '" + kind + "'");
    }
    const std::string cache_dir = get_or<std::string>(b, "cache_dir", "");
    if (!cache_dir.empty()) {
        out = std::make_shared<backend::CachingBackend>(
            out, std::make_shared<backend::ResponseCache>(config.resolve(cache_dir)));
    }
    return out;
}

std::shared_ptr<backend::Backend> failing_after(std::shared_ptr<backend::Backend> inner, std::size_t healthy_calls) {
    return std::make_shared<FailingBackend>(std::move(inner), healthy_calls);
}

}  // namespace alignaudit::report
