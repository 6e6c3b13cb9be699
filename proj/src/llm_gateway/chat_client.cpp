#include "sag/llm_gateway/chat_client.hpp"

#include "sag/common/hashing.hpp"

#include <cmath>
#include <thread>

namespace sag::llm {

std::string_view role_name(Role role) {
    switch (role) {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
    }
    return "user";
}

Role parse_role(std::string_view name) {
    if (name == "system") return Role::System;
    if (name == "user") return Role::User;
    if (name == "assistant") return Role::Assistant;
    throw InvalidArgument("unknown chat role '" + std::string(name) + "'");
}

void validate(const ChatRequest& request) {
    if (request.messages.empty()) throw InvalidArgument("chat request has no messages");
    if (request.model.empty()) throw InvalidArgument("chat request has no model");
    if (!(request.temperature >= 0.0)) throw InvalidArgument("chat temperature must be >= 0");
}

json request_body(const ChatRequest& request) {
    json messages = json::array();
    for (const auto& m : request.messages) messages.push_back({{"role", role_name(m.role)}, {"content", m.content}});
    return {{"model", request.model},
            {"messages", std::move(messages)},
            {"temperature", request.temperature},
            {"max_tokens", request.max_tokens}};
}

std::string request_hash(const ChatRequest& request) { return sha256_hex(dump_json(request_body(request))); }

std::string input_hash(const ChatRequest& request) { return sha256_hex(dump_json(request.variables)); }

std::string with_retry(const std::function<std::string()>& fn, const RetryPolicy& policy, const Sleeper& sleep) {
    const std::size_t attempts = std::max<std::size_t>(policy.max_attempts, 1);
    auto delay = policy.initial_delay;
    for (std::size_t i = 1;; ++i) {
        try {
            return fn();
        } catch (const ServiceError& e) {
            if (!e.transient() || i >= attempts) throw;
        }
        if (sleep) {
            sleep(delay);
        } else {
            std::this_thread::sleep_for(delay);
        }
        delay = std::chrono::milliseconds(
            static_cast<std::int64_t>(std::llround(static_cast<double>(delay.count()) * policy.backoff_factor)));
    }
}

}  // namespace sag::llm
