#include "alignaudit/backend/toy_lm.hpp"

#include "alignaudit/common/error.hpp"
#include "alignaudit/common/hash.hpp"
#include "alignaudit/common/text.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace alignaudit::backend {

namespace {
constexpr double kZeroMassLogit = -700.0;
}

ToyCategoricalLM::ToyCategoricalLM(std::vector<std::string> contexts, std::vector<std::string> options,
                                   std::vector<std::vector<double>> logits)
    : contexts_(std::move(contexts)), options_(std::move(options)), logits_(std::move(logits)) {
    if (options_.empty()) throw StructuralError("ToyCategoricalLM: no options");
    if (std::set<std::string>(options_.begin(), options_.end()).size() != options_.size()) {
        throw StructuralError("ToyCategoricalLM: duplicate options");
    }
    if (logits_.size() != contexts_.size()) throw StructuralError("ToyCategoricalLM: one logit row per context");
    for (const auto& row : logits_) {
        if (row.size() != options_.size()) throw StructuralError("ToyCategoricalLM: logit row width != option count");
        for (double z : row) {
            if (!std::isfinite(z)) throw StructuralError("ToyCategoricalLM: non-finite logit");
        }
    }
    index();
}

void ToyCategoricalLM::index() {
    by_context_.clear();
    for (std::size_t i = 0; i < contexts_.size(); ++i) {
        if (!by_context_.emplace(contexts_[i], i).second) {
            throw StructuralError("ToyCategoricalLM: duplicate context '" + contexts_[i] + "'");
        }
    }
}

ToyCategoricalLM ToyCategoricalLM::zeros(std::vector<std::string> contexts, std::vector<std::string> options) {
    std::vector<std::vector<double>> logits(contexts.size(), std::vector<double>(options.size(), 0.0));
    return ToyCategoricalLM(std::move(contexts), std::move(options), std::move(logits));
}

ToyCategoricalLM ToyCategoricalLM::from_distributions(const std::map<std::string, metrics::ProbDist>& targets) {
    if (targets.empty()) throw StructuralError("ToyCategoricalLM::from_distributions: no targets");
    // Option columns are the union of target labels, widest label list first.
    std::vector<std::string> options;
    for (const auto& [ctx, dist] : targets) {
        if (dist.labels().size() > options.size()) options = dist.labels();
    }
    for (const auto& [ctx, dist] : targets) {
        for (const auto& label : dist.labels()) {
            if (std::find(options.begin(), options.end(), label) == options.end()) options.push_back(label);
        }
    }
    std::vector<std::string> contexts;
    std::vector<std::vector<double>> logits;
    for (const auto& [ctx, dist] : targets) {
        contexts.push_back(ctx);
        std::vector<double> row(options.size(), kZeroMassLogit);
        for (std::size_t i = 0; i < dist.size(); ++i) {
            auto col = static_cast<std::size_t>(std::find(options.begin(), options.end(), dist.labels()[i]) -
                                                options.begin());
            row[col] = dist[i] > 0.0 ? std::max(std::log(dist[i]), kZeroMassLogit) : kZeroMassLogit;
        }
        logits.push_back(std::move(row));
    }
    return ToyCategoricalLM(std::move(contexts), std::move(options), std::move(logits));
}

std::optional<std::size_t> ToyCategoricalLM::find(const std::string& context) const {
    auto it = by_context_.find(context);
    if (it == by_context_.end()) return std::nullopt;
    return it->second;
}

std::size_t ToyCategoricalLM::require(const std::string& context) const {
    auto idx = find(context);
    if (!idx) throw StructuralError("unknown context key '" + context + "'");
    return *idx;
}

metrics::ProbDist ToyCategoricalLM::distribution(const std::string& context) const {
    return metrics::ProbDist::softmax(options_, logits_[require(context)]);
}

nlohmann::json ToyCategoricalLM::to_json() const {
    return {{"format", "alignaudit.toy_lm.v1"}, {"contexts", contexts_}, {"options", options_}, {"logits", logits_}};
}

ToyCategoricalLM ToyCategoricalLM::from_json(const nlohmann::json& j) {
    try {
        return ToyCategoricalLM(j.at("contexts").get<std::vector<std::string>>(),
                                j.at("options").get<std::vector<std::string>>(),
                                j.at("logits").get<std::vector<std::vector<double>>>());
    } catch (const nlohmann::json::exception& e) {
        throw StructuralError(std::string("toy model checkpoint: ") + e.what());
    }
}

void ToyCategoricalLM::save(const std::string& path) const { write_file_atomic(path, to_json().dump(1) + "\n"); }

ToyCategoricalLM ToyCategoricalLM::load(const std::string& path) {
    try {
        return from_json(nlohmann::json::parse(read_file(path)));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("toy model checkpoint " + path + ": " + e.what());
    }
}

ToyBackend::ToyBackend(std::shared_ptr<const ToyCategoricalLM> model, std::string name)
    : model_(std::move(model)), name_(std::move(name)) {
    if (!model_) throw StructuralError("ToyBackend: null model");
}

Completion ToyBackend::complete(const Request& request) {
    if (request.prompt.empty()) throw StructuralError("complete: empty prompt");

    Completion out;
    out.backend_id = name_;

    std::vector<std::string> options;
    for (const auto& t : request.option_tokens) options.push_back(normalize_option_token(t));
    std::optional<std::size_t> row;
    for (std::string key = request.context_key; !key.empty() && !row;) {
        row = model_->find(key);
        auto cut = key.rfind('|');
        key = cut == std::string::npos ? std::string{} : key.substr(0, cut);
    }
    if (options.empty() && row) options = model_->options();

    if (options.empty()) {
        out.text = "toy-response:" + sha256_hex(request.prompt).substr(0, 12);
        return out;
    }

    std::vector<double> logits(options.size(), 0.0);
    std::vector<bool> present(options.size(), true);
    if (row) {
        const auto& model_opts = model_->options();
        const auto& model_row = model_->logits()[*row];
        for (std::size_t i = 0; i < options.size(); ++i) {
            auto it = std::find(model_opts.begin(), model_opts.end(), options[i]);
            if (it == model_opts.end()) {
                present[i] = false;
            } else {
                logits[i] = model_row[static_cast<std::size_t>(it - model_opts.begin())];
            }
        }
        if (std::none_of(present.begin(), present.end(), [](bool b) { return b; })) {
            throw CoverageError("toy model has none of the requested options", "context " + request.context_key);
        }
    } else {
        for (std::size_t i = 0; i < options.size(); ++i) {
            auto bits = string_seed(sha256_hex(request.prompt + '\x1f' + options[i]));
            logits[i] = 4.0 * (unit_interval(bits) - 0.5);
        }
    }

    // Log-softmax over present options.
    double hi = -1e300;
    for (std::size_t i = 0; i < options.size(); ++i) {
        if (present[i]) hi = std::max(hi, logits[i]);
    }
    double z = 0.0;
    for (std::size_t i = 0; i < options.size(); ++i) {
        if (present[i]) z += std::exp(logits[i] - hi);
    }
    const double log_z = hi + std::log(z);

    std::size_t choice = options.size();
    if (request.config.temperature <= 0.0) {
        for (std::size_t i = 0; i < options.size(); ++i) {
            if (present[i] && (choice == options.size() || logits[i] > logits[choice])) choice = i;
        }
    } else {
        const double t = request.config.temperature;
        double tz = 0.0;
        std::vector<double> w(options.size(), 0.0);
        for (std::size_t i = 0; i < options.size(); ++i) {
            if (present[i]) tz += (w[i] = std::exp((logits[i] - hi) / t));
        }
        const auto seed = mix_seed(request.config.seed.value_or(0), string_seed(request.prompt),
                                   string_seed(request.context_key));
        double u = unit_interval(splitmix64(seed)) * tz;
        for (std::size_t i = 0; i < options.size(); ++i) {
            if (!present[i]) continue;
            choice = i;
            if (u < w[i]) break;
            u -= w[i];
        }
    }
    out.text = options[choice];

    if (request.want_logprobs) {
        std::map<std::string, double> lp;
        for (std::size_t i = 0; i < options.size(); ++i) {
            if (present[i]) lp[options[i]] = std::min(0.0, logits[i] - log_z);
        }
        out.first_token_logprobs = std::move(lp);
    }
    return out;
}

}  // namespace alignaudit::backend
