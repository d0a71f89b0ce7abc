#pragma once

#include "alignaudit/backend/backend.hpp"

#include <atomic>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace alignaudit::backend {

/// Backend driven by a caller-supplied responder; used for fixtures and for
/// the built-in behavioural probes (always-A, consequence-following, ...).
/// Every prompt it receives is logged in call order.
class ScriptedBackend : public Backend {
public:
    // Receives the request and the zero-based global call index.
    using Responder = std::function<std::string(const Request&, std::size_t)>;

    ScriptedBackend(std::string name, Responder responder);

    /// Replies with `replies[i]` on the i-th call, repeating the last reply.
    static std::shared_ptr<ScriptedBackend> sequence(std::string name, std::vector<std::string> replies);
    static std::shared_ptr<ScriptedBackend> constant(std::string name, std::string reply);

    std::string id() const override { return name_; }
    Completion complete(const Request& request) override;

    std::vector<std::string> prompts() const;
    std::size_t calls() const noexcept { return calls_; }

private:
    std::string name_;
    Responder responder_;
    std::atomic<std::size_t> calls_{0};
    mutable std::mutex mu_;
    std::vector<std::string> prompts_;
};

}  // namespace alignaudit::backend
