#pragma once

#include "sag/common/error.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sag::slm {

using Token = std::uint32_t;
using Tokens = std::vector<Token>;

/// Byte-level vocabulary: ids 0..255 are raw bytes, followed by the section
/// sentinels and the end-of-response marker.
namespace special {
inline constexpr Token Summary = 256;
inline constexpr Token Neutral = 257;
inline constexpr Token Reference = 258;
inline constexpr Token Response = 259;
inline constexpr Token End = 260;
}  // namespace special

inline constexpr std::size_t kByteVocabSize = 261;

inline bool is_special(Token t) { return t >= special::Summary; }

Tokens encode_text(std::string_view text);
/// Inverse of encode_text; special tokens are skipped.
std::string decode_text(std::span<const Token> tokens);

class SentinelCollisionError : public Error {
public:
    using Error::Error;
};

/// [Summary] S [Neutral] N [Reference] R [Response]. An empty section keeps
/// its sentinel. Throws SentinelCollisionError if an input contains a
/// special token and LengthOverflowError if the prompt exceeds `max_len`.
Tokens format_prompt(std::span<const Token> summary, std::span<const Token> neutral,
                     std::span<const Token> reference, std::size_t max_len);

struct PromptSections {
    Tokens summary, neutral, reference;
    friend bool operator==(const PromptSections&, const PromptSections&) = default;
};

/// Recovers the sections of a prompt built by format_prompt.
PromptSections split_prompt(std::span<const Token> prompt);

struct SftExample {
    Tokens summary, neutral, reference, target;
};

/// Prompt followed by target and End. Loss positions are
/// [target_start, tokens.size()).
struct FormattedExample {
    Tokens tokens;
    std::size_t target_start = 0;
};

FormattedExample format_sft_example(const SftExample& example, std::size_t max_len);

}  // namespace sag::slm
