#pragma once

#include "sag/llm_gateway/chat_client.hpp"
#include "sag/llm_gateway/templates.hpp"

#include <exception>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace sag::llm {

struct GatewayConfig {
    std::string model = "gpt-4o";
    std::string judge_model = "gpt-4o";
    double temperature = 0.0;
    std::size_t max_tokens = 1024;
    std::size_t max_in_flight = 4;
};

struct NeutralizationResult {
    std::string summary;
    std::string neutral_text;
};

struct CorrectionResult {
    std::string verified_text;
    std::size_t edits_applied = 0;
};

struct JudgeVerdict {
    bool factual_hallucinated = false;
    bool faithful_hallucinated = false;
    std::string rationale;

    friend bool operator==(const JudgeVerdict&, const JudgeVerdict&) = default;
};

/// Word-level edit count between two texts: max of tokens removed from and
/// added to `before`, relative to their longest common subsequence.
std::size_t count_edits(std::string_view before, std::string_view after);

/// Strict judge format: one JSON object with boolean "factual" and
/// "faithful" and a string "rationale" (non-empty if a flag is set).
JudgeVerdict parse_judge_verdict(std::string_view response);

/// The large-model side of the pipeline: renders prompt templates, sends
/// them through a ChatClient and validates what comes back.
class Gateway {
public:
    Gateway(std::shared_ptr<ChatClient> client, PromptLibrary prompts, GatewayConfig config = {});

    /// Summary of `article` keeping its key facts. Throws EmptyResponseError
    /// on an empty reply and ResponseFormatError when the reply has more
    /// word units than the article.
    std::string extract_summary(const std::string& article) const;
    /// Neutral paraphrase of `article`. Throws ResponseFormatError if the
    /// reply contains emoji.
    std::string neutralize(const std::string& article) const;
    NeutralizationResult simulate_intention(const std::string& article) const;
    CorrectionResult correct_hallucinations(const std::string& generated, const std::string& summary,
                                            const std::string& reference) const;
    /// Asks for a strict JSON verdict; an unparseable reply gets one repair
    /// prompt before ResponseFormatError is thrown.
    JudgeVerdict judge_hallucination(const std::string& generated, const std::string& summary,
                                     const std::string& reference) const;

    /// Runs fn(0..n-1) with at most max_in_flight calls in progress. Returns
    /// one exception_ptr per index (null on success).
    std::vector<std::exception_ptr> parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) const;

    const GatewayConfig& config() const { return config_; }

private:
    std::string call(const std::string& template_name, const json& variables, const std::string& model) const;

    std::shared_ptr<ChatClient> client_;
    PromptLibrary prompts_;
    GatewayConfig config_;
};

}  // namespace sag::llm
