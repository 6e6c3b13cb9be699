#include "sag/text/unicode.hpp"

namespace sag::text {
namespace {

constexpr char32_t kReplacement = 0xFFFD;

bool in(char32_t cp, char32_t lo, char32_t hi) { return cp >= lo && cp <= hi; }

// Zero-width joiner, variation selectors and skin-tone modifiers glue emoji
// sequences together; they carry no token of their own.
bool is_emoji_modifier(char32_t cp) {
    return cp == 0x200D || in(cp, 0xFE00, 0xFE0F) || in(cp, 0x1F3FB, 0x1F3FF);
}

char32_t to_lower(char32_t cp) {
    if (in(cp, U'A', U'Z')) return cp + 32;
    if ((in(cp, 0xC0, 0xDE)) && cp != 0xD7) return cp + 32;
    return cp;
}

}  // namespace

std::vector<char32_t> decode_utf8(std::string_view s) {
    std::vector<char32_t> out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        const auto b0 = static_cast<unsigned char>(s[i]);
        std::size_t len = 0;
        char32_t cp = 0;
        if (b0 < 0x80) {
            len = 1;
            cp = b0;
        } else if ((b0 & 0xE0) == 0xC0) {
            len = 2;
            cp = b0 & 0x1F;
        } else if ((b0 & 0xF0) == 0xE0) {
            len = 3;
            cp = b0 & 0x0F;
        } else if ((b0 & 0xF8) == 0xF0) {
            len = 4;
            cp = b0 & 0x07;
        }
        bool ok = len > 0 && i + len <= s.size();
        for (std::size_t k = 1; ok && k < len; ++k) {
            const auto b = static_cast<unsigned char>(s[i + k]);
            if ((b & 0xC0) != 0x80) ok = false;
            cp = (cp << 6) | (b & 0x3F);
        }
        if (!ok) {
            out.push_back(kReplacement);
            ++i;
            continue;
        }
        out.push_back(cp);
        i += len;
    }
    return out;
}

std::string encode_utf8(char32_t cp) {
    std::string out;
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
    return out;
}

bool is_emoji(char32_t cp) {
    if (is_emoji_modifier(cp)) return false;
    return in(cp, 0x1F000, 0x1FAFF) || in(cp, 0x2600, 0x27BF) || in(cp, 0x2B00, 0x2BFF) ||
           in(cp, 0x1FC00, 0x1FFFF);
}

CharClass classify(char32_t cp) {
    if (in(cp, U'a', U'z') || in(cp, U'A', U'Z') || in(cp, U'0', U'9')) return CharClass::LatinAlnum;
    // Latin-1 Supplement letters and Latin Extended-A/B, excluding × and ÷
    if ((in(cp, 0xC0, 0x24F)) && cp != 0xD7 && cp != 0xF7) return CharClass::LatinAlnum;
    if (in(cp, 0x4E00, 0x9FFF) || in(cp, 0x3400, 0x4DBF) || in(cp, 0x20000, 0x2A6DF) ||
        in(cp, 0xF900, 0xFAFF) || in(cp, 0x3040, 0x30FF) || in(cp, 0xAC00, 0xD7AF)) {
        return CharClass::Cjk;
    }
    if (is_emoji(cp)) return CharClass::Emoji;
    if (cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' || cp == 0x3000 || cp == 0xA0) return CharClass::Space;
    return CharClass::Other;
}

std::size_t word_count(std::string_view s) {
    std::size_t count = 0;
    bool in_run = false;
    for (char32_t cp : decode_utf8(s)) {
        const auto c = classify(cp);
        if (c == CharClass::LatinAlnum) {
            if (!in_run) ++count;
            in_run = true;
            continue;
        }
        in_run = false;
        if (c == CharClass::Cjk) ++count;
    }
    return count;
}

std::vector<std::string> tokenize_for_metrics(std::string_view s) {
    std::vector<std::string> tokens;
    std::string run;
    auto flush = [&] {
        if (!run.empty()) tokens.push_back(std::move(run));
        run.clear();
    };
    for (char32_t cp : decode_utf8(s)) {
        switch (classify(cp)) {
            case CharClass::LatinAlnum:
                run += encode_utf8(to_lower(cp));
                break;
            case CharClass::Cjk:
            case CharClass::Emoji:
                flush();
                tokens.push_back(encode_utf8(cp));
                break;
            default:
                flush();
                break;
        }
    }
    flush();
    return tokens;
}

bool contains_emoji(std::string_view s) {
    for (char32_t cp : decode_utf8(s))
        if (is_emoji(cp)) return true;
    return false;
}

std::string strip_emoji(std::string_view s) {
    std::string out;
    for (char32_t cp : decode_utf8(s)) {
        if (is_emoji(cp) || is_emoji_modifier(cp)) continue;
        out += encode_utf8(cp);
    }
    return out;
}

}  // namespace sag::text
