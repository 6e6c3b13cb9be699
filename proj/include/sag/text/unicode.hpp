#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace sag::text {

enum class CharClass { LatinAlnum, Cjk, Emoji, Space, Other };

/// Decodes UTF-8; invalid bytes decode to U+FFFD and consume one byte.
std::vector<char32_t> decode_utf8(std::string_view s);
std::string encode_utf8(char32_t cp);

CharClass classify(char32_t cp);
bool is_emoji(char32_t cp);

/// Word units: a maximal run of Latin alphanumerics is one unit, each CJK
/// character is one unit, everything else counts zero.
std::size_t word_count(std::string_view s);

/// Metric tokens: lowercased Latin runs, one token per CJK character, one
/// token per emoji codepoint. Punctuation and emoji modifiers are dropped.
std::vector<std::string> tokenize_for_metrics(std::string_view s);

bool contains_emoji(std::string_view s);
std::string strip_emoji(std::string_view s);

}  // namespace sag::text
