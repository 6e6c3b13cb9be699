#pragma once

#include "sag/common/io.hpp"

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace sag {

struct NamedBuffer {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<float> values;
};

/// Binary checkpoint layout (little-endian):
///   8-byte magic | u32 format version | u64 header length | header JSON |
///   float32 payload of every buffer in header order.
/// The header carries `meta` plus the name and shape of each buffer.
void write_checkpoint(const fs::path& path, std::string_view magic, std::uint32_t version, const json& meta,
                      const std::vector<NamedBuffer>& buffers);

struct LoadedCheckpoint {
    std::uint32_t version = 0;
    json meta;
    std::vector<NamedBuffer> buffers;
};

LoadedCheckpoint read_checkpoint(const fs::path& path, std::string_view magic);

}  // namespace sag
