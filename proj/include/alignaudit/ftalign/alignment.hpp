#pragma once

#include "alignaudit/backend/backend.hpp"
#include "alignaudit/backend/toy_lm.hpp"
#include "alignaudit/metrics/prob_dist.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace alignaudit::ftalign {

/// One supervised context: "question|country[|demographic]" and the human
/// answer distribution the model should reproduce.
struct AlignmentExample {
    std::string context_key;
    metrics::ProbDist target;
};

struct TrainConfig {
    double learning_rate = 0.5;
    int max_epochs = 500;
    double convergence_tol = 1e-12;  // stop when |loss delta| falls below
    std::uint64_t seed = 0;
    int divergence_patience = 5;
};

void validate(const TrainConfig& config);

/// Mean over examples of KL(target || softmax(logits[context])).
double alignment_loss(const backend::ToyCategoricalLM& model, const std::vector<AlignmentExample>& examples);

using Gradient = std::vector<std::vector<double>>;  // same shape as the logit matrix

/// Exact gradient of alignment_loss with respect to the logits: row c holds
/// (1/N) * sum over examples e at c of (softmax(row c) - target_e).
Gradient loss_gradient(const backend::ToyCategoricalLM& model, const std::vector<AlignmentExample>& examples);

struct TrainResult {
    backend::ToyCategoricalLM model;
    double initial_loss = 0.0;
    std::vector<double> loss_history;  // loss after each epoch
    int epochs = 0;
    bool converged = false;
};

/// Full-batch gradient descent without momentum. Each row's step is the
/// gradient rescaled by N / (examples at that context), i.e. the mean of
/// (softmax - target) over that context's examples, so rows converge at the
/// same rate however many contexts share the batch. Stops at max_epochs or
/// when the loss changes by less than convergence_tol. Throws
/// DivergenceError when the loss stays above its best value for
/// `divergence_patience` consecutive epochs or becomes non-finite.
TrainResult train(const backend::ToyCategoricalLM& model, const std::vector<AlignmentExample>& examples,
                  const TrainConfig& config);

/// Model with one row per distinct example context and logits drawn
/// uniformly from [-scale, scale] by `seed`; a stand-in for an untuned model.
backend::ToyCategoricalLM initial_model(const std::vector<AlignmentExample>& examples, std::uint64_t seed,
                                        double scale = 1.0);

enum class EvalMode { ZS, FT, ZS_ctrl, FT_ctrl };
std::string to_string(EvalMode m);
bool is_ctrl(EvalMode m);

struct EvalProtocol {
    EvalMode mode = EvalMode::FT;
    std::uint64_t ctrl_seed = 0;
};

using Predictor = std::function<metrics::ProbDist(const std::string& context_key)>;

struct EvalResult {
    std::vector<std::string> context_keys;
    std::vector<double> one_minus_jsd;  // per example
    double mean = 0.0;
};

/// Country label of a context key (second '|' segment).
std::string context_country(const std::string& context_key);
std::string replace_country(const std::string& context_key, const std::string& country);

/// Seeded cyclic permutation (Sattolo) of the distinct countries, so no
/// country maps to itself. Throws ConfigError with fewer than two countries.
std::map<std::string, std::string> country_permutation(const std::vector<AlignmentExample>& examples,
                                                       std::uint64_t seed);

/// 1 - JSD between the predicted distribution and the target, per example
/// and averaged. ctrl modes query the predictor with the country label
/// replaced through country_permutation() while scoring against the
/// original target.
EvalResult evaluate(const Predictor& predict, const std::vector<AlignmentExample>& examples,
                    const EvalProtocol& protocol);
EvalResult evaluate(const backend::ToyCategoricalLM& model, const std::vector<AlignmentExample>& examples,
                    const EvalProtocol& protocol);

/// (ft - zs) / zs.
double relative_gain(double zs_mean, double ft_mean);

}  // namespace alignaudit::ftalign
