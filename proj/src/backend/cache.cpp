#include "alignaudit/backend/cache.hpp"

#include "alignaudit/common/error.hpp"
#include "alignaudit/common/hash.hpp"
#include "alignaudit/common/text.hpp"

#include <filesystem>
#include <mutex>

namespace alignaudit::backend {

nlohmann::json completion_to_json(const Completion& c) {
    nlohmann::json j{{"text", c.text}, {"backend_id", c.backend_id}, {"raw", c.raw}};
    if (c.first_token_logprobs) {
        j["first_token_logprobs"] = *c.first_token_logprobs;
    } else {
        j["first_token_logprobs"] = nullptr;
    }
    return j;
}

Completion completion_from_json(const nlohmann::json& j) {
    Completion c;
    c.text = j.at("text").get<std::string>();
    c.backend_id = j.at("backend_id").get<std::string>();
    c.raw = j.value("raw", std::string{});
    if (j.contains("first_token_logprobs") && !j["first_token_logprobs"].is_null()) {
        c.first_token_logprobs = j["first_token_logprobs"].get<std::map<std::string, double>>();
    }
    return c;
}

std::string cache_digest(const std::string& backend_id, const std::string& model, const Request& request) {
    nlohmann::json key = nlohmann::json::array();
    key.push_back(backend_id);
    key.push_back(model);
    key.push_back(request.prompt);
    key.push_back({{"temperature", request.config.temperature},
                   {"max_tokens", request.config.max_tokens},
                   {"sample_width", request.config.sample_width},
                   {"seed", request.config.seed ? nlohmann::json(*request.config.seed) : nlohmann::json()}});
    key.push_back(request.context_key);
    key.push_back(request.option_tokens);
    key.push_back(request.want_logprobs);
    return sha256_hex(key.dump());
}

ResponseCache::ResponseCache(std::string directory) : directory_(std::move(directory)) {
    if (!directory_.empty()) std::filesystem::create_directories(directory_);
}

std::string ResponseCache::path_for(const std::string& digest) const {
    return (std::filesystem::path(directory_) / (digest + ".json")).string();
}

std::optional<Completion> ResponseCache::load(const std::string& digest) const {
    {
        std::shared_lock lock(mu_);
        if (auto it = memory_.find(digest); it != memory_.end()) {
            ++hits_;
            return it->second;
        }
    }
    if (!directory_.empty()) {
        auto path = path_for(digest);
        if (std::filesystem::exists(path)) {
            Completion c;
            try {
                auto j = nlohmann::json::parse(read_file(path));
                if (j.value("digest", std::string{}) != digest) throw Error("digest mismatch");
                c = completion_from_json(j.at("completion"));
            } catch (const std::exception& e) {
                throw Error("corrupt cache entry " + path + ": " + e.what());
            }
            std::unique_lock lock(mu_);
            memory_.emplace(digest, c);
            ++hits_;
            return c;
        }
    }
    ++misses_;
    return std::nullopt;
}

void ResponseCache::store(const std::string& digest, const Completion& completion) {
    Completion stored = completion;
    stored.cached = false;
    if (!directory_.empty()) {
        nlohmann::json j{{"digest", digest}, {"completion", completion_to_json(stored)}};
        write_file_atomic(path_for(digest), j.dump() + "\n");
    }
    std::unique_lock lock(mu_);
    memory_[digest] = std::move(stored);
}

CachingBackend::CachingBackend(std::shared_ptr<Backend> inner, std::shared_ptr<ResponseCache> cache)
    : inner_(std::move(inner)), cache_(std::move(cache)) {
    if (!inner_ || !cache_) throw StructuralError("CachingBackend: null backend or cache");
}

Completion CachingBackend::complete(const Request& request) {
    const auto digest = cache_digest(inner_->id(), inner_->model(), request);
    if (auto hit = cache_->load(digest)) {
        hit->cached = true;
        return *hit;
    }
    Completion fresh = inner_->complete(request);
    cache_->store(digest, fresh);
    fresh.cached = false;
    return fresh;
}

}  // namespace alignaudit::backend
