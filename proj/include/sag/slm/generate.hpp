#pragma once

#include "sag/slm/model.hpp"

#include <cstdint>
#include <string>

namespace sag::slm {

struct DecodingOptions {
    bool greedy = true;
    double temperature = 1.0;
    std::size_t top_k = 0;  // 0 keeps the full distribution
    std::size_t max_new_tokens = 256;
    std::uint64_t seed = 0;
};

/// Continues `prompt` until a special token is produced, `max_new_tokens`
/// is reached or the context is full. The stop token is not returned.
/// Throws LengthOverflowError if the prompt itself does not fit.
Tokens generate(const SLMParams& params, std::span<const Token> prompt, const DecodingOptions& options);
std::string generate_text(const SLMParams& params, std::span<const Token> prompt, const DecodingOptions& options);

}  // namespace sag::slm
