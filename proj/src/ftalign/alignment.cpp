#include "alignaudit/ftalign/alignment.hpp"

#include "alignaudit/common/error.hpp"
#include "alignaudit/common/hash.hpp"
#include "alignaudit/common/text.hpp"
#include "alignaudit/metrics/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace alignaudit::ftalign {

void validate(const TrainConfig& config) {
    if (!(config.learning_rate > 0.0)) throw ConfigError("train: learning_rate must be > 0");
    if (config.max_epochs < 1) throw ConfigError("train: max_epochs must be >= 1");
    if (!(config.convergence_tol > 0.0)) throw ConfigError("train: convergence_tol must be > 0");
    if (config.divergence_patience < 1) throw ConfigError("train: divergence_patience must be >= 1");
}

namespace {

std::vector<std::size_t> resolve_rows(const backend::ToyCategoricalLM& model,
                                      const std::vector<AlignmentExample>& examples) {
    if (examples.empty()) throw DegenerateInputError("alignment: no examples");
    std::vector<std::size_t> rows;
    rows.reserve(examples.size());
    for (const auto& e : examples) {
        if (e.target.labels() != model.options()) {
            throw StructuralError("alignment: target labels of '" + e.context_key + "' differ from model options");
        }
        rows.push_back(model.require(e.context_key));
    }
    return rows;
}

double loss_at(const backend::ToyCategoricalLM& model, const std::vector<AlignmentExample>& examples,
               const std::vector<std::size_t>& rows) {
    double total = 0.0;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        auto pred = metrics::ProbDist::softmax(model.options(), model.logits()[rows[i]]);
        total += metrics::kl_divergence(examples[i].target, pred);
    }
    return total / static_cast<double>(examples.size());
}

}  // namespace

double alignment_loss(const backend::ToyCategoricalLM& model, const std::vector<AlignmentExample>& examples) {
    return loss_at(model, examples, resolve_rows(model, examples));
}

Gradient loss_gradient(const backend::ToyCategoricalLM& model, const std::vector<AlignmentExample>& examples) {
    const auto rows = resolve_rows(model, examples);
    const std::size_t k = model.options().size();
    Gradient grad(model.contexts().size(), std::vector<double>(k, 0.0));
    const double inv_n = 1.0 / static_cast<double>(examples.size());
    for (std::size_t i = 0; i < examples.size(); ++i) {
        auto pred = metrics::ProbDist::softmax(model.options(), model.logits()[rows[i]]);
        for (std::size_t j = 0; j < k; ++j) grad[rows[i]][j] += inv_n * (pred[j] - examples[i].target[j]);
    }
    return grad;
}

TrainResult train(const backend::ToyCategoricalLM& model, const std::vector<AlignmentExample>& examples,
                  const TrainConfig& config) {
    validate(config);
    const auto rows = resolve_rows(model, examples);
    std::vector<double> per_row(model.contexts().size(), 0.0);
    for (auto r : rows) per_row[r] += 1.0;
    const double n = static_cast<double>(examples.size());

    TrainResult out{model, 0.0, {}, 0, false};
    out.initial_loss = loss_at(out.model, examples, rows);
    double previous = out.initial_loss;
    double best = out.initial_loss;
    int worse_streak = 0;

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        auto grad = loss_gradient(out.model, examples);
        auto& logits = out.model.mutable_logits();
        for (std::size_t r = 0; r < logits.size(); ++r) {
            if (per_row[r] == 0.0) continue;
            const double scale = config.learning_rate * n / per_row[r];
            for (std::size_t j = 0; j < logits[r].size(); ++j) logits[r][j] -= scale * grad[r][j];
            // Re-centre the row; softmax is shift invariant.
            double hi = *std::max_element(logits[r].begin(), logits[r].end());
            if (!std::isfinite(hi)) {
                throw DivergenceError("train: logits became non-finite at epoch " + std::to_string(epoch));
            }
            for (double& z : logits[r]) z -= hi;
        }
        const double loss = loss_at(out.model, examples, rows);
        out.loss_history.push_back(loss);
        out.epochs = epoch;
        if (!std::isfinite(loss)) throw DivergenceError("train: loss became non-finite at epoch " + std::to_string(epoch));

        if (loss > best * (1.0 + 1e-9) + 1e-15) {
            if (++worse_streak >= config.divergence_patience) {
                throw DivergenceError("train: loss above its best value (" + format_fixed(best, 6) + ") for " +
                                      std::to_string(worse_streak) + " consecutive epochs; last loss " +
                                      format_fixed(loss, 6) + " at epoch " + std::to_string(epoch) +
                                      ", learning_rate " + std::to_string(config.learning_rate));
            }
        } else {
            worse_streak = 0;
        }
        best = std::min(best, loss);
        if (std::abs(previous - loss) < config.convergence_tol) {
            out.converged = true;
            break;
        }
        previous = loss;
    }
    return out;
}

backend::ToyCategoricalLM initial_model(const std::vector<AlignmentExample>& examples, std::uint64_t seed,
                                        double scale) {
    if (examples.empty()) throw DegenerateInputError("initial_model: no examples");
    std::vector<std::string> contexts;
    std::set<std::string> seen;
    for (const auto& e : examples) {
        if (seen.insert(e.context_key).second) contexts.push_back(e.context_key);
    }
    const auto& options = examples.front().target.labels();
    std::vector<std::vector<double>> logits;
    for (const auto& c : contexts) {
        std::vector<double> row;
        std::uint64_t state = mix_seed(seed, string_seed(c));
        for (std::size_t j = 0; j < options.size(); ++j) {
            state = splitmix64(state);
            row.push_back(scale * (2.0 * unit_interval(state) - 1.0));
        }
        logits.push_back(std::move(row));
    }
    return backend::ToyCategoricalLM(std::move(contexts), options, std::move(logits));
}

std::string to_string(EvalMode m) {
    switch (m) {
        case EvalMode::ZS: return "ZS";
        case EvalMode::FT: return "FT";
        case EvalMode::ZS_ctrl: return "ZS [ctrl]";
        case EvalMode::FT_ctrl: return "FT [ctrl]";
    }
    return "?";
}

bool is_ctrl(EvalMode m) { return m == EvalMode::ZS_ctrl || m == EvalMode::FT_ctrl; }

std::string context_country(const std::string& context_key) {
    auto parts = split(context_key, '|');
    if (parts.size() < 2 || parts[1].empty()) {
        throw StructuralError("context key '" + context_key + "' has no country segment");
    }
    return parts[1];
}

std::string replace_country(const std::string& context_key, const std::string& country) {
    auto parts = split(context_key, '|');
    if (parts.size() < 2) throw StructuralError("context key '" + context_key + "' has no country segment");
    parts[1] = country;
    return join(parts, "|");
}

std::map<std::string, std::string> country_permutation(const std::vector<AlignmentExample>& examples,
                                                       std::uint64_t seed) {
    std::set<std::string> distinct;
    for (const auto& e : examples) distinct.insert(context_country(e.context_key));
    if (distinct.size() < 2) throw ConfigError("ctrl evaluation needs at least two distinct countries");
    std::vector<std::string> countries(distinct.begin(), distinct.end());
    std::vector<std::string> image = countries;
    std::uint64_t state = mix_seed(seed, 0x6374726cULL);
    for (std::size_t i = image.size() - 1; i > 0; --i) {
        state = splitmix64(state);
        std::swap(image[i], image[state % i]);  // j < i: Sattolo
    }
    std::map<std::string, std::string> out;
    for (std::size_t i = 0; i < countries.size(); ++i) out[countries[i]] = image[i];
    return out;
}

EvalResult evaluate(const Predictor& predict, const std::vector<AlignmentExample>& examples,
                    const EvalProtocol& protocol) {
    if (examples.empty()) throw DegenerateInputError("evaluate: no examples");
    std::map<std::string, std::string> perm;
    if (is_ctrl(protocol.mode)) perm = country_permutation(examples, protocol.ctrl_seed);
    EvalResult out;
    double sum = 0.0;
    for (const auto& e : examples) {
        std::string key = e.context_key;
        if (!perm.empty()) key = replace_country(key, perm.at(context_country(key)));
        auto pred = predict(key);
        metrics::require_same_labels(pred, e.target, "evaluate");
        double score = 1.0 - metrics::jensen_shannon(pred, e.target);
        out.context_keys.push_back(e.context_key);
        out.one_minus_jsd.push_back(score);
        sum += score;
    }
    out.mean = sum / static_cast<double>(examples.size());
    return out;
}

EvalResult evaluate(const backend::ToyCategoricalLM& model, const std::vector<AlignmentExample>& examples,
                    const EvalProtocol& protocol) {
    return evaluate([&](const std::string& key) { return model.distribution(key); }, examples, protocol);
}

double relative_gain(double zs_mean, double ft_mean) {
    if (zs_mean == 0.0) throw DegenerateInputError("relative_gain: zero baseline");
    return (ft_mean - zs_mean) / zs_mean;
}

}  // namespace alignaudit::ftalign
