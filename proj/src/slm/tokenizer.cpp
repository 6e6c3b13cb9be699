#include "sag/slm/tokenizer.hpp"

#include <algorithm>

namespace sag::slm {
namespace {

void check_no_sentinel(std::span<const Token> section, const char* name) {
    if (std::any_of(section.begin(), section.end(), [](Token t) { return t > 255; })) {
        throw SentinelCollisionError(std::string(name) + " section contains a reserved token");
    }
}

}  // namespace

Tokens encode_text(std::string_view text) {
    Tokens out;
    out.reserve(text.size());
    for (unsigned char c : text) out.push_back(c);
    return out;
}

std::string decode_text(std::span<const Token> tokens) {
    std::string out;
    out.reserve(tokens.size());
    for (Token t : tokens)
        if (t < 256) out.push_back(static_cast<char>(t));
    return out;
}

Tokens format_prompt(std::span<const Token> summary, std::span<const Token> neutral,
                     std::span<const Token> reference, std::size_t max_len) {
    check_no_sentinel(summary, "summary");
    check_no_sentinel(neutral, "neutral");
    check_no_sentinel(reference, "reference");
    const std::size_t len = summary.size() + neutral.size() + reference.size() + 4;
    if (len > max_len) {
        throw LengthOverflowError("prompt of " + std::to_string(len) + " tokens exceeds limit " + std::to_string(max_len));
    }
    Tokens out;
    out.reserve(len);
    out.push_back(special::Summary);
    out.insert(out.end(), summary.begin(), summary.end());
    out.push_back(special::Neutral);
    out.insert(out.end(), neutral.begin(), neutral.end());
    out.push_back(special::Reference);
    out.insert(out.end(), reference.begin(), reference.end());
    out.push_back(special::Response);
    return out;
}

PromptSections split_prompt(std::span<const Token> prompt) {
    auto find = [&](Token t) {
        auto it = std::find(prompt.begin(), prompt.end(), t);
        if (it == prompt.end()) throw InvalidArgument("prompt is missing a section sentinel");
        return static_cast<std::size_t>(it - prompt.begin());
    };
    const std::size_t s = find(special::Summary), n = find(special::Neutral), r = find(special::Reference),
                      e = find(special::Response);
    if (!(s == 0 && s < n && n < r && r < e)) throw InvalidArgument("prompt sentinels out of order");
    PromptSections out;
    out.summary.assign(prompt.begin() + 1, prompt.begin() + static_cast<std::ptrdiff_t>(n));
    out.neutral.assign(prompt.begin() + static_cast<std::ptrdiff_t>(n + 1), prompt.begin() + static_cast<std::ptrdiff_t>(r));
    out.reference.assign(prompt.begin() + static_cast<std::ptrdiff_t>(r + 1), prompt.begin() + static_cast<std::ptrdiff_t>(e));
    return out;
}

FormattedExample format_sft_example(const SftExample& example, std::size_t max_len) {
    if (example.target.empty()) throw InvalidArgument("SFT example has an empty target");
    check_no_sentinel(example.target, "target");
    FormattedExample f;
    f.tokens = format_prompt(example.summary, example.neutral, example.reference, max_len);
    f.target_start = f.tokens.size();
    const std::size_t len = f.tokens.size() + example.target.size() + 1;
    if (len > max_len) {
        throw LengthOverflowError("formatted example of " + std::to_string(len) + " tokens exceeds limit " +
                                  std::to_string(max_len));
    }
    f.tokens.insert(f.tokens.end(), example.target.begin(), example.target.end());
    f.tokens.push_back(special::End);
    return f;
}

}  // namespace sag::slm
