#pragma once

#include "alignaudit/backend/backend.hpp"

#include <chrono>
#include <memory>
#include <mutex>
#include <semaphore>
#include <string>

namespace alignaudit::backend {

/// Token bucket: `rate_per_second` tokens refill continuously up to `burst`.
/// A rate of zero disables limiting.
class TokenBucket {
public:
    TokenBucket(double rate_per_second, double burst);
    void acquire();

private:
    double rate_;
    double burst_;
    double tokens_;
    std::chrono::steady_clock::time_point last_;
    std::mutex mu_;
};

struct RemoteConfig {
    std::string base_url;          // e.g. https://api.example.com/v1
    std::string model;
    std::string api_key_env = "OPENAI_API_KEY";
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{500};
    int top_logprobs = 20;
    std::chrono::seconds timeout{60};
    std::size_t max_concurrency = 4;
    double requests_per_second = 0.0;
    double burst = 4.0;
};

/// Client for OpenAI-compatible chat-completions endpoints.
///
/// Transport failures and 5xx responses are retried with exponential backoff
/// up to `max_attempts`; 401/403 raise AuthenticationError immediately; any
/// other non-success status or an unparseable body raises
/// MalformedPayloadError carrying the body.
class RemoteBackend : public Backend {
public:
    /// Reads the API key from the configured environment variable; a missing
    /// variable is an AuthenticationError.
    explicit RemoteBackend(RemoteConfig config);
    RemoteBackend(RemoteConfig config, std::string api_key);

    std::string id() const override;
    std::string model() const override { return config_.model; }
    bool supports_logprobs() const override { return true; }
    std::size_t max_concurrency() const override { return config_.max_concurrency; }
    Completion complete(const Request& request) override;

    /// Parses a chat-completions response body; exposed for tests.
    static Completion parse_response(const std::string& body, const std::string& backend_id);
    std::string request_body(const Request& request) const;

private:
    RemoteConfig config_;
    std::string api_key_;
    std::string scheme_host_port_;
    std::string path_prefix_;
    std::unique_ptr<std::counting_semaphore<>> inflight_;
    TokenBucket bucket_;
};

}  // namespace alignaudit::backend
