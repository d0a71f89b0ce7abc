#include "alignaudit/backend/remote.hpp"

#include "alignaudit/common/error.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdlib>
#include <thread>

namespace alignaudit::backend {

TokenBucket::TokenBucket(double rate_per_second, double burst)
    : rate_(rate_per_second), burst_(std::max(1.0, burst)), tokens_(std::max(1.0, burst)),
      last_(std::chrono::steady_clock::now()) {}

void TokenBucket::acquire() {
    if (rate_ <= 0.0) return;
    while (true) {
        std::chrono::duration<double> wait{0.0};
        {
            std::lock_guard lock(mu_);
            auto now = std::chrono::steady_clock::now();
            tokens_ = std::min(burst_, tokens_ + std::chrono::duration<double>(now - last_).count() * rate_);
            last_ = now;
            if (tokens_ >= 1.0) {
                tokens_ -= 1.0;
                return;
            }
            wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
        }
        std::this_thread::sleep_for(wait);
    }
}

namespace {

std::string env_or_throw(const std::string& name) {
    const char* v = std::getenv(name.c_str());
    if (!v || !*v) throw AuthenticationError("API key environment variable " + name + " is not set");
    return v;
}

}  // namespace

RemoteBackend::RemoteBackend(RemoteConfig config) : RemoteBackend(config, env_or_throw(config.api_key_env)) {}

RemoteBackend::RemoteBackend(RemoteConfig config, std::string api_key)
    : config_(std::move(config)), api_key_(std::move(api_key)),
      inflight_(std::make_unique<std::counting_semaphore<>>(
          static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, config_.max_concurrency)))),
      bucket_(config_.requests_per_second, config_.burst) {
    const auto& url = config_.base_url;
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("remote base_url needs a scheme: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    scheme_host_port_ = url.substr(0, path_start);
    path_prefix_ = path_start == std::string::npos ? std::string{} : url.substr(path_start);
    while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
    if (config_.model.empty()) throw ConfigError("remote backend: model name is required");
    if (config_.max_attempts < 1) throw ConfigError("remote backend: max_attempts must be >= 1");
}

std::string RemoteBackend::id() const { return "remote:" + config_.model; }

std::string RemoteBackend::request_body(const Request& request) const {
    nlohmann::json body{{"model", config_.model},
                        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}})},
                        {"temperature", request.config.temperature},
                        {"max_tokens", request.config.max_tokens}};
    if (request.config.sample_width > 1) body["n"] = request.config.sample_width;
    if (request.config.seed) body["seed"] = *request.config.seed;
    if (request.want_logprobs) {
        body["logprobs"] = true;
        body["top_logprobs"] = config_.top_logprobs;
    }
    return body.dump();
}

Completion RemoteBackend::parse_response(const std::string& body, const std::string& backend_id) {
    Completion c;
    c.backend_id = backend_id;
    c.raw = body;
    try {
        auto j = nlohmann::json::parse(body);
        const auto& choice = j.at("choices").at(0);
        const auto& content = choice.at("message").at("content");
        c.text = content.is_null() ? std::string{} : content.get<std::string>();
        if (choice.contains("logprobs") && !choice["logprobs"].is_null()) {
            const auto& tokens = choice["logprobs"].at("content");
            if (!tokens.empty()) {
                std::map<std::string, double> lp;
                const auto& first = tokens.at(0);
                lp[first.at("token").get<std::string>()] = first.at("logprob").get<double>();
                if (first.contains("top_logprobs")) {
                    for (const auto& alt : first["top_logprobs"]) {
                        lp[alt.at("token").get<std::string>()] = alt.at("logprob").get<double>();
                    }
                }
                for (auto& [token, v] : lp) {
                    if (v > 1e-9) throw MalformedPayloadError("positive log-probability for token '" + token + "'", body);
                    v = std::min(v, 0.0);
                }
                c.first_token_logprobs = std::move(lp);
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw MalformedPayloadError(std::string("malformed chat-completions payload: ") + e.what(), body);
    }
    return c;
}

Completion RemoteBackend::complete(const Request& request) {
    if (request.prompt.empty()) throw StructuralError("complete: empty prompt");
    const std::string body = request_body(request);
    const std::string path = path_prefix_ + "/chat/completions";

    inflight_->acquire();
    struct Release {
        std::counting_semaphore<>* s;
        ~Release() { s->release(); }
    } release{inflight_.get()};

    auto backoff = config_.initial_backoff;
    std::string last_error;
    for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
        bucket_.acquire();
        httplib::Client client(scheme_host_port_);
        client.set_connection_timeout(config_.timeout);
        client.set_read_timeout(config_.timeout);
        client.set_write_timeout(config_.timeout);
        httplib::Headers headers{{"Authorization", "Bearer " + api_key_}};
        auto res = client.Post(path, headers, body, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
        } else if (res->status == 401 || res->status == 403) {
            throw AuthenticationError("authentication rejected (HTTP " + std::to_string(res->status) + ")");
        } else if (res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
        } else if (res->status != 200) {
            throw MalformedPayloadError("unexpected HTTP " + std::to_string(res->status), res->body);
        } else {
            return parse_response(res->body, id());
        }
        if (attempt < config_.max_attempts) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
    }
    throw BackendError(id() + ": giving up after " + std::to_string(config_.max_attempts) +
                           " attempts (" + last_error + ")",
                       true);
}

}  // namespace alignaudit::backend
