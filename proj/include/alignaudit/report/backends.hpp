#pragma once

#include "alignaudit/backend/backend.hpp"
#include "alignaudit/report/config.hpp"
#include "alignaudit/survey/question.hpp"

#include <memory>
#include <string>
#include <vector>

namespace alignaudit::report {

/// Built-in scripted behaviours:
///   always:<X>               replies X to every prompt
///   consequence-following    "B" when the prompt carries a consequence line, else "A"
///   consequence-insensitive  "A" or "B" from a hash of the prompt with consequence lines removed
///   history-sensitive        "B" when the prompt carries earlier choices, else "A"
///   invalid                  an unparseable reply
std::shared_ptr<backend::Backend> scripted_behaviour(const std::string& behaviour);
std::vector<std::string> scripted_behaviours();

/// Toy model whose rows reproduce the human data: "qid|culture" rows hold
/// population distributions and "qid|culture|gender|age" rows hold cell
/// distributions. Options span the longest question; missing options get a
/// vanishing logit.
std::shared_ptr<backend::Backend> human_mirror_backend(const survey::HumanDataset& human,
                                                       const std::vector<survey::SurveyQuestion>& questions);

/// Builds the backend described by config["backend"]:
///   {"kind": "toy", "model": optional path}
///   {"kind": "human-mirror"}  (needs survey.questions and survey.human)
///   {"kind": "scripted", "script": behaviour}
///   {"kind": "remote", "base_url", "model", "api_key_env", "max_attempts", "top_logprobs",
///    "timeout_s", "max_concurrency", "requests_per_second", "burst"}
/// Any kind accepts "cache_dir" to wrap the backend in a response cache.
std::shared_ptr<backend::Backend> make_backend(const RunConfig& config);

/// Wraps a backend so that every call after the first `healthy_calls`
/// throws a retryable BackendError; used to rehearse interrupted runs.
std::shared_ptr<backend::Backend> failing_after(std::shared_ptr<backend::Backend> inner, std::size_t healthy_calls);

}  // namespace alignaudit::report
