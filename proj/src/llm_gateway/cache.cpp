#include "sag/llm_gateway/chat_client.hpp"

namespace sag::llm {

CachingClient::CachingClient(std::shared_ptr<ChatClient> inner, fs::path dir)
    : inner_(std::move(inner)), dir_(std::move(dir)) {
    fs::create_directories(dir_);
}

fs::path CachingClient::entry_path(const std::string& hash) const { return dir_ / hash.substr(0, 2) / (hash + ".json"); }

std::string CachingClient::complete(const ChatRequest& request) {
    const std::string hash = request_hash(request);
    const fs::path path = entry_path(hash);
    {
        std::shared_lock lock(mutex_);
        if (fs::exists(path)) {
            ++hits_;
            return json::parse(read_file(path)).at("response").get<std::string>();
        }
    }
    std::string response = inner_->complete(request);
    json entry = {{"hash", hash}, {"request", request_body(request)}, {"response", response}};
    std::unique_lock lock(mutex_);
    ++misses_;
    write_file_atomic(path, dump_json(entry));
    return response;
}

RecordingClient::RecordingClient(std::shared_ptr<ChatClient> inner, fs::path log_path) : inner_(std::move(inner)) {
    if (log_path.has_parent_path()) fs::create_directories(log_path.parent_path());
    log_.open(log_path, std::ios::app);
    if (!log_) throw Error("cannot open session log " + log_path.string());
}

std::string RecordingClient::complete(const ChatRequest& request) {
    std::string response = inner_->complete(request);
    json line = {{"hash", request_hash(request)},
                 {"template_id", request.template_id},
                 {"input_hash", input_hash(request)},
                 {"request", request_body(request)},
                 {"response", response}};
    std::lock_guard lock(mutex_);
    log_ << dump_json(line) << '\n';
    log_.flush();
    return response;
}

ReplayClient::ReplayClient(const fs::path& log_path) {
    for_each_jsonl(log_path, [&](const json& j, std::size_t) {
        responses_[j.at("hash").get<std::string>()] = j.at("response").get<std::string>();
    });
}

std::string ReplayClient::complete(const ChatRequest& request) {
    auto it = responses_.find(request_hash(request));
    if (it == responses_.end()) {
        throw ServiceError("no recorded response for request " + request_hash(request), 0, false);
    }
    return it->second;
}

}  // namespace sag::llm
