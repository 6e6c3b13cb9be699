#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <string_view>

namespace sag {

namespace fs = std::filesystem;
using json = nlohmann::json;

/// Output file that only becomes visible under its final name on commit().
/// Writes go to a sibling temporary; an uncommitted writer removes it.
class AtomicWriter {
public:
    explicit AtomicWriter(fs::path target, bool binary = false);
    ~AtomicWriter();

    AtomicWriter(const AtomicWriter&) = delete;
    AtomicWriter& operator=(const AtomicWriter&) = delete;

    std::ostream& stream() { return out_; }
    void commit();

private:
    fs::path target_;
    fs::path temp_;
    std::ofstream out_;
    bool committed_ = false;
};

void write_file_atomic(const fs::path& path, std::string_view contents);
std::string read_file(const fs::path& path);

/// Serialises without throwing on invalid UTF-8 (bytes are replaced).
std::string dump_json(const json& value, int indent = -1);

/// Calls `fn(record, line_number)` for every non-blank line. Throws ParseError
/// with the 1-based line number on malformed JSON.
void for_each_jsonl(const fs::path& path, const std::function<void(const json&, std::size_t)>& fn);

}  // namespace sag
