#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "sag/llm_gateway/chat_client.hpp"

#include <cstdlib>

namespace sag::llm {
namespace {

std::pair<std::string, std::string> split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw InvalidArgument("endpoint URL needs a scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

HttpChatClient::HttpChatClient(HttpClientConfig config, Sleeper sleep)
    : config_(std::move(config)), sleep_(std::move(sleep)) {
    std::tie(origin_, path_) = split_url(config_.url);
}

std::unique_ptr<HttpChatClient> HttpChatClient::from_environment() {
    const char* url = std::getenv("SAG_LLM_URL");
    if (!url || !*url) throw InvalidArgument("SAG_LLM_URL is not set");
    const char* key = std::getenv("SAG_LLM_KEY");
    HttpClientConfig cfg;
    cfg.url = url;
    cfg.api_key = key ? key : "";
    return std::make_unique<HttpChatClient>(std::move(cfg));
}

std::string HttpChatClient::complete(const ChatRequest& request) {
    validate(request);
    return with_retry([&] { return attempt(request); }, config_.retry, sleep_);
}

std::string HttpChatClient::attempt(const ChatRequest& request) {
    httplib::Client cli(origin_);
    cli.set_connection_timeout(config_.timeout);
    cli.set_read_timeout(config_.timeout);
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

    auto res = cli.Post(path_, headers, dump_json(request_body(request)), "application/json");
    if (!res) {
        throw ServiceError("transport error: " + httplib::to_string(res.error()), 0, true);
    }
    if (res->status >= 500) {
        throw ServiceError("server error " + std::to_string(res->status), res->status, true);
    }
    if (res->status >= 400) {
        throw ServiceError("request rejected with status " + std::to_string(res->status) + ": " + res->body,
                           res->status, false);
    }
    json body;
    try {
        body = json::parse(res->body);
    } catch (const json::parse_error& e) {
        throw ResponseFormatError(std::string("chat response is not JSON: ") + e.what());
    }
    const auto& choices = body.value("choices", json::array());
    if (!choices.is_array() || choices.empty()) throw EmptyResponseError("chat response has no choices");
    const auto& message = choices.front().value("message", json::object());
    const auto content = message.value("content", json(nullptr));
    if (!content.is_string() || content.get<std::string>().empty()) {
        throw EmptyResponseError("chat response has empty content");
    }
    return content.get<std::string>();
}

}  // namespace sag::llm
