#pragma once

#include "alignaudit/backend/backend.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>

namespace alignaudit::backend {

nlohmann::json completion_to_json(const Completion& c);
Completion completion_from_json(const nlohmann::json& j);

/// Lowercase hex SHA-256 over the canonical JSON encoding of
/// (backend_id, model, prompt, generation config, context key, option tokens,
/// logprob flag).
std::string cache_digest(const std::string& backend_id, const std::string& model, const Request& request);

/// Content-addressed completion store: one `<digest>.json` file per entry
/// under `directory`. An empty directory keeps entries in memory only. Safe
/// for concurrent readers and writers.
class ResponseCache {
public:
    explicit ResponseCache(std::string directory = {});

    std::optional<Completion> load(const std::string& digest) const;
    void store(const std::string& digest, const Completion& completion);

    const std::string& directory() const noexcept { return directory_; }
    std::size_t hits() const noexcept { return hits_; }
    std::size_t misses() const noexcept { return misses_; }

private:
    std::string path_for(const std::string& digest) const;

    std::string directory_;
    mutable std::shared_mutex mu_;
    mutable std::map<std::string, Completion> memory_;
    mutable std::atomic<std::size_t> hits_{0};
    mutable std::atomic<std::size_t> misses_{0};
};

/// Consults the cache before forwarding to the wrapped backend; hits come back
/// with `cached = true` and are otherwise identical to the stored completion.
class CachingBackend : public Backend {
public:
    CachingBackend(std::shared_ptr<Backend> inner, std::shared_ptr<ResponseCache> cache);

    std::string id() const override { return inner_->id(); }
    std::string model() const override { return inner_->model(); }
    bool supports_logprobs() const override { return inner_->supports_logprobs(); }
    std::size_t max_concurrency() const override { return inner_->max_concurrency(); }
    Completion complete(const Request& request) override;

private:
    std::shared_ptr<Backend> inner_;
    std::shared_ptr<ResponseCache> cache_;
};

}  // namespace alignaudit::backend
