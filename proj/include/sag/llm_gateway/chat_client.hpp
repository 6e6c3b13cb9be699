#pragma once

#include "sag/common/error.hpp"
#include "sag/common/io.hpp"

#include <atomic>
#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

namespace sag::llm {

enum class Role { System, User, Assistant };

std::string_view role_name(Role role);
Role parse_role(std::string_view name);

struct ChatMessage {
    Role role = Role::User;
    std::string content;
};

struct ChatRequest {
    std::string model;
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    std::size_t max_tokens = 1024;

    // Local provenance, never sent on the wire: which template produced the
    // messages and the values it was rendered with. Mocks key on these.
    std::string template_id;
    json variables = json::object();
};

/// Throws InvalidArgument unless the request has at least one message, a
/// non-negative temperature and a model name.
void validate(const ChatRequest& request);

/// Wire body: {"model", "messages": [{"role", "content"}], "temperature", "max_tokens"}.
json request_body(const ChatRequest& request);
/// SHA-256 of the canonical wire body; stable across runs and platforms.
std::string request_hash(const ChatRequest& request);
/// SHA-256 of the template variables.
std::string input_hash(const ChatRequest& request);

/// Failure reported by the chat service. Transient failures (transport
/// errors, 5xx) may be retried; everything else is terminal.
class ServiceError : public Error {
public:
    ServiceError(const std::string& what, int status, bool transient)
        : Error(what), status_(status), transient_(transient) {}
    int status() const noexcept { return status_; }
    bool transient() const noexcept { return transient_; }

private:
    int status_;
    bool transient_;
};

class EmptyResponseError : public Error {
public:
    using Error::Error;
};

class ResponseFormatError : public Error {
public:
    using Error::Error;
};

class ChatClient {
public:
    virtual ~ChatClient() = default;
    /// Returns the first choice's message content. Implementations must be
    /// safe to call from several threads at once.
    virtual std::string complete(const ChatRequest& request) = 0;
};

struct RetryPolicy {
    std::size_t max_attempts = 3;
    std::chrono::milliseconds initial_delay{500};
    double backoff_factor = 2.0;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

/// Runs `fn`, retrying transient ServiceErrors with exponential backoff.
std::string with_retry(const std::function<std::string()>& fn, const RetryPolicy& policy, const Sleeper& sleep);

struct HttpClientConfig {
    std::string url;  // e.g. https://host/v1/chat/completions
    std::string api_key;
    std::chrono::seconds timeout{120};
    RetryPolicy retry;
};

/// OpenAI-style chat-completion endpoint over HTTP(S).
class HttpChatClient : public ChatClient {
public:
    explicit HttpChatClient(HttpClientConfig config, Sleeper sleep = {});
    /// Reads SAG_LLM_URL and SAG_LLM_KEY. Throws when the URL is unset.
    static std::unique_ptr<HttpChatClient> from_environment();

    std::string complete(const ChatRequest& request) override;

private:
    std::string attempt(const ChatRequest& request);

    HttpClientConfig config_;
    std::string origin_;
    std::string path_;
    Sleeper sleep_;
};

/// Content-addressed response cache in front of another client. Entries are
/// files named by request hash; concurrent readers, serialised writers.
class CachingClient : public ChatClient {
public:
    CachingClient(std::shared_ptr<ChatClient> inner, fs::path dir);
    std::string complete(const ChatRequest& request) override;

    std::size_t hits() const { return hits_; }
    std::size_t misses() const { return misses_; }

private:
    fs::path entry_path(const std::string& hash) const;

    std::shared_ptr<ChatClient> inner_;
    fs::path dir_;
    mutable std::shared_mutex mutex_;
    std::atomic<std::size_t> hits_{0}, misses_{0};
};

/// Appends every exchange to a JSONL session log:
/// {"hash", "template_id", "input_hash", "request", "response"}.
class RecordingClient : public ChatClient {
public:
    RecordingClient(std::shared_ptr<ChatClient> inner, fs::path log_path);
    std::string complete(const ChatRequest& request) override;

private:
    std::shared_ptr<ChatClient> inner_;
    std::mutex mutex_;
    std::ofstream log_;
};

/// Serves responses from a session log by request hash.
class ReplayClient : public ChatClient {
public:
    explicit ReplayClient(const fs::path& log_path);
    std::string complete(const ChatRequest& request) override;
    std::size_t size() const { return responses_.size(); }

private:
    std::unordered_map<std::string, std::string> responses_;
};

/// Mock backed by a pure function of (template id, variables).
class FunctionMockClient : public ChatClient {
public:
    using Fn = std::function<std::string(const std::string& template_id, const json& variables)>;
    explicit FunctionMockClient(Fn fn) : fn_(std::move(fn)) {}
    std::string complete(const ChatRequest& request) override { return fn_(request.template_id, request.variables); }

private:
    Fn fn_;
};

/// Mock answering from a fixed table keyed by (template id, input hash).
class CannedMockClient : public ChatClient {
public:
    void add(const std::string& template_id, const json& variables, std::string response);
    std::string complete(const ChatRequest& request) override;

private:
    std::unordered_map<std::string, std::string> table_;
};

/// Deterministic rule-based stand-in for the large model, used by tests and
/// offline pipeline runs. See rule_mock_response() for the rules.
class RuleMockClient : public ChatClient {
public:
    std::string complete(const ChatRequest& request) override;
};

/// Rules per template name (the part of the template id before '@'):
///   summary     key facts of the article (capitalised words and numbers)
///   neutralize  article with emoji and uncommon punctuation removed
///   correct     numbers not supported by the summary replaced by the
///               summary's numbers; missing summary facts appended
///   judge       factual = a number absent from summary and reference;
///               faithful = a summary fact missing from the text
std::string rule_mock_response(const std::string& template_id, const json& variables);

/// Capitalised words and numbers of `text`, in order, without duplicates.
std::vector<std::string> key_facts(std::string_view text);
/// Whitespace-separated words of `text` that consist of digits.
std::vector<std::string> numbers_in(std::string_view text);

}  // namespace sag::llm
