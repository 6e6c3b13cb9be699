#include "sag/common/io.hpp"

#include "sag/common/error.hpp"

#include <atomic>
#include <sstream>
#include <thread>

#include <unistd.h>

namespace sag {
namespace {

fs::path temp_sibling(const fs::path& target) {
    static std::atomic<unsigned> counter{0};
    auto name = target.filename().string();
    name += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);
    return target.parent_path() / name;
}

}  // namespace

AtomicWriter::AtomicWriter(fs::path target, bool binary)
    : target_(std::move(target)), temp_(temp_sibling(target_)) {
    if (target_.has_parent_path()) fs::create_directories(target_.parent_path());
    out_.open(temp_, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
    if (!out_) throw Error("cannot open " + temp_.string() + " for writing");
}

AtomicWriter::~AtomicWriter() {
    if (!committed_) {
        out_.close();
        std::error_code ec;
        fs::remove(temp_, ec);
    }
}

void AtomicWriter::commit() {
    out_.flush();
    if (!out_) throw Error("write failed for " + target_.string());
    out_.close();
    fs::rename(temp_, target_);
    committed_ = true;
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
    AtomicWriter w(path, true);
    w.stream().write(contents.data(), static_cast<std::streamsize>(contents.size()));
    w.commit();
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string dump_json(const json& value, int indent) {
    return value.dump(indent, ' ', false, json::error_handler_t::replace);
}

void for_each_jsonl(const fs::path& path, const std::function<void(const json&, std::size_t)>& fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(std::string("malformed JSON: ") + e.what(), lineno);
        }
        fn(record, lineno);
    }
}

}  // namespace sag
