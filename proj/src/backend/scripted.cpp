#include "alignaudit/backend/scripted.hpp"

#include "alignaudit/common/error.hpp"

namespace alignaudit::backend {

ScriptedBackend::ScriptedBackend(std::string name, Responder responder)
    : name_(std::move(name)), responder_(std::move(responder)) {}

std::shared_ptr<ScriptedBackend> ScriptedBackend::sequence(std::string name, std::vector<std::string> replies) {
    if (replies.empty()) throw StructuralError("ScriptedBackend::sequence: no replies");
    return std::make_shared<ScriptedBackend>(std::move(name), [replies = std::move(replies)](const Request&, std::size_t i) {
        return replies[std::min(i, replies.size() - 1)];
    });
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::constant(std::string name, std::string reply) {
    return std::make_shared<ScriptedBackend>(std::move(name), [reply = std::move(reply)](const Request&, std::size_t) { return reply; });
}

Completion ScriptedBackend::complete(const Request& request) {
    std::size_t index;
    {
        std::lock_guard lock(mu_);
        index = calls_++;
        prompts_.push_back(request.prompt);
    }
    Completion c;
    c.text = responder_(request, index);
    c.backend_id = name_;
    return c;
}

std::vector<std::string> ScriptedBackend::prompts() const {
    std::lock_guard lock(mu_);
    return prompts_;
}

}  // namespace alignaudit::backend
