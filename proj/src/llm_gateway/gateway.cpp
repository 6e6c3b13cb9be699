#include "sag/llm_gateway/gateway.hpp"

#include "sag/common/parallel.hpp"
#include "sag/text/unicode.hpp"

#include <algorithm>
#include <sstream>

namespace sag::llm {
namespace {

std::vector<std::string> split_ws(std::string_view s) {
    std::vector<std::string> out;
    std::istringstream in{std::string(s)};
    std::string w;
    while (in >> w) out.push_back(w);
    return out;
}

void require_inputs(std::initializer_list<std::pair<const char*, const std::string*>> inputs) {
    for (const auto& [name, value] : inputs) {
        if (value->empty()) throw InvalidArgument(std::string(name) + " must not be empty");
    }
}

}  // namespace

std::size_t count_edits(std::string_view before, std::string_view after) {
    const auto a = split_ws(before), b = split_ws(after);
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    const std::size_t lcs = prev[b.size()];
    return std::max(a.size() - lcs, b.size() - lcs);
}

JudgeVerdict parse_judge_verdict(std::string_view response) {
    json j;
    try {
        j = json::parse(response);
    } catch (const json::parse_error&) {
        throw ResponseFormatError("judge reply is not a JSON object");
    }
    if (!j.is_object()) throw ResponseFormatError("judge reply is not a JSON object");
    auto flag = [&](const char* key) {
        auto it = j.find(key);
        if (it == j.end() || !it->is_boolean()) throw ResponseFormatError(std::string("judge reply lacks boolean '") + key + "'");
        return it->get<bool>();
    };
    JudgeVerdict v;
    v.factual_hallucinated = flag("factual");
    v.faithful_hallucinated = flag("faithful");
    auto r = j.find("rationale");
    if (r != j.end() && !r->is_string()) throw ResponseFormatError("judge rationale must be a string");
    if (r != j.end()) v.rationale = r->get<std::string>();
    if ((v.factual_hallucinated || v.faithful_hallucinated) && v.rationale.empty()) {
        throw ResponseFormatError("judge flagged a hallucination without a rationale");
    }
    return v;
}

Gateway::Gateway(std::shared_ptr<ChatClient> client, PromptLibrary prompts, GatewayConfig config)
    : client_(std::move(client)), prompts_(std::move(prompts)), config_(std::move(config)) {
    if (!client_) throw InvalidArgument("gateway needs a chat client");
}

std::string Gateway::call(const std::string& template_name, const json& variables, const std::string& model) const {
    const auto& tmpl = prompts_.get(template_name);
    ChatRequest req;
    req.model = model;
    req.messages = tmpl.render(variables);
    req.temperature = config_.temperature;
    req.max_tokens = config_.max_tokens;
    req.template_id = tmpl.id();
    req.variables = variables;
    validate(req);
    std::string reply = client_->complete(req);
    if (reply.find_first_not_of(" \t\r\n") == std::string::npos) {
        throw EmptyResponseError("empty reply for template " + tmpl.id());
    }
    return reply;
}

std::string Gateway::extract_summary(const std::string& article) const {
    require_inputs({{"article", &article}});
    std::string summary = call("summary", {{"article", article}}, config_.model);
    if (text::word_count(summary) > text::word_count(article)) {
        throw ResponseFormatError("summary is longer than its article");
    }
    return summary;
}

std::string Gateway::neutralize(const std::string& article) const {
    require_inputs({{"article", &article}});
    std::string neutral = call("neutralize", {{"article", article}}, config_.model);
    if (text::contains_emoji(neutral)) throw ResponseFormatError("neutral text still contains emoji");
    return neutral;
}

NeutralizationResult Gateway::simulate_intention(const std::string& article) const {
    return {extract_summary(article), neutralize(article)};
}

CorrectionResult Gateway::correct_hallucinations(const std::string& generated, const std::string& summary,
                                                 const std::string& reference) const {
    require_inputs({{"generated", &generated}, {"summary", &summary}, {"reference", &reference}});
    CorrectionResult r;
    r.verified_text = call("correct", {{"generated", generated}, {"summary", summary}, {"reference", reference}},
                           config_.model);
    r.edits_applied = count_edits(generated, r.verified_text);
    return r;
}

JudgeVerdict Gateway::judge_hallucination(const std::string& generated, const std::string& summary,
                                          const std::string& reference) const {
    require_inputs({{"generated", &generated}, {"summary", &summary}, {"reference", &reference}});
    json vars = {{"generated", generated}, {"summary", summary}, {"reference", reference}};
    const std::string first = call("judge", vars, config_.judge_model);
    try {
        return parse_judge_verdict(first);
    } catch (const ResponseFormatError&) {
        vars["previous"] = first;
    }
    return parse_judge_verdict(call("judge_repair", vars, config_.judge_model));
}

std::vector<std::exception_ptr> Gateway::parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) const {
    return parallel_indexed(n, config_.max_in_flight, fn);
}

}  // namespace sag::llm
