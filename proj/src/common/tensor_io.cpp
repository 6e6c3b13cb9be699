#include "sag/common/tensor_io.hpp"

#include "sag/common/error.hpp"

#include <bit>
#include <cstring>

namespace sag {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

template <class T>
void put(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T take(std::istream& in, const fs::path& path) {
    T value{};
    if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) throw ParseError("truncated checkpoint " + path.string());
    return value;
}

std::string pad_magic(std::string_view magic) {
    std::string m(magic.substr(0, 8));
    m.resize(8, '\0');
    return m;
}

}  // namespace

void write_checkpoint(const fs::path& path, std::string_view magic, std::uint32_t version, const json& meta,
                      const std::vector<NamedBuffer>& buffers) {
    json header;
    header["meta"] = meta;
    header["buffers"] = json::array();
    for (const auto& b : buffers) header["buffers"].push_back({{"name", b.name}, {"shape", b.shape}});
    const std::string text = dump_json(header);

    AtomicWriter w(path, true);
    auto& out = w.stream();
    const std::string m = pad_magic(magic);
    out.write(m.data(), 8);
    put<std::uint32_t>(out, version);
    put<std::uint64_t>(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& b : buffers) {
        out.write(reinterpret_cast<const char*>(b.values.data()),
                  static_cast<std::streamsize>(b.values.size() * sizeof(float)));
    }
    w.commit();
}

LoadedCheckpoint read_checkpoint(const fs::path& path, std::string_view magic) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open checkpoint " + path.string());
    std::string m(8, '\0');
    if (!in.read(m.data(), 8) || m != pad_magic(magic)) {
        throw ParseError("bad checkpoint magic in " + path.string());
    }
    LoadedCheckpoint ck;
    ck.version = take<std::uint32_t>(in, path);
    const auto header_len = take<std::uint64_t>(in, path);
    std::string text(header_len, '\0');
    if (!in.read(text.data(), static_cast<std::streamsize>(header_len))) throw ParseError("truncated checkpoint header");
    json header = json::parse(text);
    ck.meta = header.at("meta");
    for (const auto& entry : header.at("buffers")) {
        NamedBuffer b;
        b.name = entry.at("name").get<std::string>();
        b.shape = entry.at("shape").get<std::vector<std::size_t>>();
        std::size_t n = 1;
        for (auto s : b.shape) n *= s;
        b.values.resize(n);
        if (!in.read(reinterpret_cast<char*>(b.values.data()), static_cast<std::streamsize>(n * sizeof(float)))) {
            throw ParseError("truncated checkpoint payload for " + b.name);
        }
        ck.buffers.push_back(std::move(b));
    }
    return ck;
}

}  // namespace sag
