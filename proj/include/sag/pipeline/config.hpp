#pragma once

#include "sag/llm_gateway/gateway.hpp"
#include "sag/slm/generate.hpp"
#include "sag/slm/trainer.hpp"
#include "sag/style_embed/trainer.hpp"
#include "sag/style_filter/style_filter.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace sag::pipeline {

struct PathsConfig {
    fs::path corpus;
    fs::path work_dir;
};

struct GatewaySettings {
    std::string backend = "mock";  // mock | http | replay
    std::string url_env = "SAG_LLM_URL";
    std::string key_env = "SAG_LLM_KEY";
    llm::GatewayConfig gateway;
    bool cache = true;
    fs::path cache_dir;    // default <work_dir>/llm_cache
    fs::path session_log;  // default <work_dir>/llm_session.jsonl
    fs::path replay_log;   // required for the replay backend
    fs::path prompts_dir;  // default: prompts shipped with the source tree
};

struct InvgenConfig {
    double heldout_fraction = 0.1;  // feeds build-prefs
    double bench_fraction = 0.1;    // feeds eval when no benchmark file is given
    std::size_t max_train_examples = 0;  // 0 keeps all
};

struct EvalConfig {
    fs::path benchmark;  // empty: the split written by invgen
    bool shuffle_refs = false;
    std::uint64_t seed = 0;
    std::vector<std::string> targets{"sft", "dpo"};
    bool judge = true;
    /// Text the neutral rewrite is made from at evaluation: "summary" (the
    /// user instruction, as at inference) or "article" (the gold article,
    /// as during inverse generation).
    std::string neutral_from = "summary";
};

/// Everything a pipeline run reads. Loaded from a key-value file:
///
///     seed = 7
///     [paths]
///     corpus = data/corpus.jsonl
///
/// Keys are grouped in [sections]; '#' starts a comment. Relative paths are
/// resolved against the config file's directory. See README for all keys.
struct PipelineConfig {
    std::uint64_t seed = 0;
    PathsConfig paths;
    FilterTrainConfig encoder;
    FilterConfig filter;
    GatewaySettings gateway;
    InvgenConfig invgen;
    slm::ModelConfig slm;
    slm::TrainConfig sft = slm::sft_defaults();
    slm::TrainConfig dpo = slm::dpo_defaults();
    slm::DecodingOptions decode;
    EvalConfig eval;
};

/// Throws ParseError (with line number) on malformed lines, unknown
/// sections or keys, and unparseable values.
PipelineConfig parse_config(std::string_view text, const fs::path& base_dir);
PipelineConfig load_config(const fs::path& path);

/// Flat "section.key" -> value map of every setting.
json config_to_json(const PipelineConfig& config);

}  // namespace sag::pipeline
