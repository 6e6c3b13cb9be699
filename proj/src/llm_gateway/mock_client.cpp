#include "sag/llm_gateway/chat_client.hpp"

#include "sag/text/unicode.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace sag::llm {
namespace {

bool is_ascii_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

std::vector<std::string> ascii_words(std::string_view text) {
    std::vector<std::string> words;
    std::string cur;
    for (char c : text) {
        if (is_ascii_alnum(c)) {
            cur.push_back(c);
        } else if (!cur.empty()) {
            words.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) words.push_back(std::move(cur));
    return words;
}

bool all_digits(const std::string& w) {
    return !w.empty() && std::all_of(w.begin(), w.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

std::string template_name(const std::string& template_id) { return template_id.substr(0, template_id.find('@')); }

std::string var(const json& vars, const char* key) {
    auto it = vars.find(key);
    if (it == vars.end() || !it->is_string()) throw InvalidArgument(std::string("mock: missing variable '") + key + "'");
    return it->get<std::string>();
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

std::string mock_summary(const std::string& article) {
    auto facts = key_facts(article);
    if (facts.empty()) {
        auto words = ascii_words(article);
        words.resize(std::min<std::size_t>(words.size(), 8));
        facts = words;
    }
    return join(facts, " ");
}

std::string mock_neutralize(const std::string& article) {
    std::string out;
    bool pending_space = false;
    for (char32_t cp : text::decode_utf8(text::strip_emoji(article))) {
        const bool keep = cp >= 0x80 || std::isalnum(static_cast<int>(cp)) || cp == U'.' || cp == U',' ||
                          cp == U'\'' || cp == U'$' || cp == U'%' || cp == U'-';
        const bool space = cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r';
        if (space || !keep) {
            // dropped punctuation still separates words
            pending_space = pending_space || !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out += text::encode_utf8(cp);
    }
    return out;
}

std::string mock_correct(const std::string& generated, const std::string& summary) {
    const auto supported = numbers_in(summary);
    const std::set<std::string> ok(supported.begin(), supported.end());
    std::string out;
    std::size_t replaced = 0;
    std::size_t i = 0;
    while (i < generated.size()) {
        if (!std::isdigit(static_cast<unsigned char>(generated[i]))) {
            out.push_back(generated[i++]);
            continue;
        }
        std::size_t j = i;
        while (j < generated.size() && std::isdigit(static_cast<unsigned char>(generated[j]))) ++j;
        std::string num = generated.substr(i, j - i);
        if (!ok.empty() && !ok.count(num)) num = supported[replaced++ % supported.size()];
        out += num;
        i = j;
    }
    const auto words = ascii_words(out);
    const std::set<std::string> present(words.begin(), words.end());
    std::vector<std::string> missing;
    for (const auto& f : key_facts(summary))
        if (!present.count(f)) missing.push_back(f);
    if (!missing.empty()) {
        if (!out.empty() && out.back() != ' ') out.push_back(' ');
        out += join(missing, " ");
    }
    return out;
}

std::string mock_judge(const std::string& generated, const std::string& summary, const std::string& reference) {
    std::set<std::string> grounded;
    for (const auto& n : numbers_in(summary)) grounded.insert(n);
    for (const auto& n : numbers_in(reference)) grounded.insert(n);
    std::vector<std::string> fabricated;
    for (const auto& n : numbers_in(generated))
        if (!grounded.count(n)) fabricated.push_back(n);

    const auto words = ascii_words(generated);
    const std::set<std::string> present(words.begin(), words.end());
    std::vector<std::string> missing;
    for (const auto& f : key_facts(summary))
        if (!present.count(f)) missing.push_back(f);

    std::string rationale;
    if (!fabricated.empty()) rationale += "unsupported numbers: " + join(fabricated, ", ") + ". ";
    if (!missing.empty()) rationale += "missing facts: " + join(missing, ", ") + ".";
    if (rationale.empty()) rationale = "consistent with the summary";
    json verdict = {{"factual", !fabricated.empty()}, {"faithful", !missing.empty()}, {"rationale", rationale}};
    return verdict.dump();
}

}  // namespace

std::vector<std::string> numbers_in(std::string_view text) {
    std::vector<std::string> out;
    for (auto& w : ascii_words(text))
        if (all_digits(w)) out.push_back(std::move(w));
    return out;
}

std::vector<std::string> key_facts(std::string_view text) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (auto& w : ascii_words(text)) {
        const bool fact = all_digits(w) || std::isupper(static_cast<unsigned char>(w.front()));
        if (fact && seen.insert(w).second) out.push_back(std::move(w));
    }
    return out;
}

std::string rule_mock_response(const std::string& template_id, const json& vars) {
    const std::string name = template_name(template_id);
    if (name == "summary") return mock_summary(var(vars, "article"));
    if (name == "neutralize") return mock_neutralize(var(vars, "article"));
    if (name == "correct") return mock_correct(var(vars, "generated"), var(vars, "summary"));
    if (name == "judge" || name == "judge_repair") {
        return mock_judge(var(vars, "generated"), var(vars, "summary"), var(vars, "reference"));
    }
    throw InvalidArgument("rule mock has no rule for template '" + template_id + "'");
}

std::string RuleMockClient::complete(const ChatRequest& request) {
    validate(request);
    return rule_mock_response(request.template_id, request.variables);
}

void CannedMockClient::add(const std::string& template_id, const json& variables, std::string response) {
    ChatRequest probe;
    probe.variables = variables;
    table_[template_id + "#" + input_hash(probe)] = std::move(response);
}

std::string CannedMockClient::complete(const ChatRequest& request) {
    auto it = table_.find(request.template_id + "#" + input_hash(request));
    if (it == table_.end()) {
        throw ServiceError("canned mock has no response for template " + request.template_id, 404, false);
    }
    return it->second;
}

}  // namespace sag::llm
