#include "sag/pipeline/config.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <sstream>

namespace sag::pipeline {
namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_number(const std::string& v) {
    T out{};
    const auto* end = v.data() + v.size();
    auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end) throw InvalidArgument("'" + v + "' is not a valid number");
    return out;
}

template <>
double parse_number<double>(const std::string& v) {
    std::size_t used = 0;
    double out = 0.0;
    try {
        out = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != v.size() || v.empty()) throw InvalidArgument("'" + v + "' is not a valid number");
    return out;
}

bool parse_bool(const std::string& v) {
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    throw InvalidArgument("'" + v + "' is not a boolean");
}

DecayShape parse_decay(const std::string& v) {
    if (v == "constant") return DecayShape::Constant;
    if (v == "cosine") return DecayShape::Cosine;
    if (v == "linear") return DecayShape::Linear;
    throw InvalidArgument("unknown decay '" + v + "' (constant, cosine, linear)");
}

std::string decay_name(DecayShape d) {
    switch (d) {
        case DecayShape::Constant: return "constant";
        case DecayShape::Cosine: return "cosine";
        case DecayShape::Linear: return "linear";
    }
    return "?";
}

struct Binding {
    std::function<void(PipelineConfig&, const std::string&, const fs::path& base)> set;
    std::function<json(const PipelineConfig&)> get;
};

template <class T, class F>
Binding number(F ref) {
    return {[ref](PipelineConfig& c, const std::string& v, const fs::path&) { ref(c) = parse_number<T>(v); },
            [ref](const PipelineConfig& c) { return json(ref(c)); }};
}

template <class F>
Binding boolean(F ref) {
    return {[ref](PipelineConfig& c, const std::string& v, const fs::path&) { ref(c) = parse_bool(v); },
            [ref](const PipelineConfig& c) { return json(ref(c)); }};
}

template <class F>
Binding string(F ref) {
    return {[ref](PipelineConfig& c, const std::string& v, const fs::path&) { ref(c) = v; },
            [ref](const PipelineConfig& c) { return json(ref(c)); }};
}

template <class F>
Binding path(F ref) {
    return {[ref](PipelineConfig& c, const std::string& v, const fs::path& base) {
                ref(c) = v.empty() ? fs::path() : (fs::path(v).is_absolute() ? fs::path(v) : base / v).lexically_normal();
            },
            [ref](const PipelineConfig& c) { return json(ref(c).string()); }};
}

template <class F>
Binding decay(F ref) {
    return {[ref](PipelineConfig& c, const std::string& v, const fs::path&) { ref(c) = parse_decay(v); },
            [ref](const PipelineConfig& c) { return json(decay_name(ref(c))); }};
}

void add_train_bindings(std::map<std::string, Binding>& b, const std::string& section,
                        slm::TrainConfig PipelineConfig::*member) {
    auto field = [member](auto slm::TrainConfig::*f) {
        return [member, f](auto& c) -> auto& { return (c.*member).*f; };
    };
    b[section + ".learning_rate"] = number<double>(field(&slm::TrainConfig::learning_rate));
    b[section + ".decay"] = decay(field(&slm::TrainConfig::decay));
    b[section + ".warmup_fraction"] = number<double>(field(&slm::TrainConfig::warmup_fraction));
    b[section + ".batch_size"] = number<std::size_t>(field(&slm::TrainConfig::batch_size));
    b[section + ".epochs"] = number<std::size_t>(field(&slm::TrainConfig::epochs));
    b[section + ".max_seq_len"] = number<std::size_t>(field(&slm::TrainConfig::max_seq_len));
    b[section + ".beta"] = number<double>(field(&slm::TrainConfig::beta));
    b[section + ".grad_clip"] = number<double>(field(&slm::TrainConfig::grad_clip));
}

const std::map<std::string, Binding>& bindings() {
    static const std::map<std::string, Binding> table = [] {
        using C = PipelineConfig;
        std::map<std::string, Binding> b;
        b["seed"] = number<std::uint64_t>([](auto& c) -> auto& { return c.seed; });

        b["paths.corpus"] = path([](auto& c) -> auto& { return c.paths.corpus; });
        b["paths.work_dir"] = path([](auto& c) -> auto& { return c.paths.work_dir; });

        b["encoder.vocab_buckets"] = number<std::size_t>([](auto& c) -> auto& { return c.encoder.encoder.vocab_buckets; });
        b["encoder.dim"] = number<std::size_t>([](auto& c) -> auto& { return c.encoder.encoder.dim; });
        b["encoder.layers"] = number<std::size_t>([](auto& c) -> auto& { return c.encoder.encoder.layers; });
        b["encoder.epochs"] = number<std::size_t>([](auto& c) -> auto& { return c.encoder.epochs; });
        b["encoder.batch_size"] = number<std::size_t>([](auto& c) -> auto& { return c.encoder.batch_size; });
        b["encoder.learning_rate"] = number<double>([](auto& c) -> auto& { return c.encoder.learning_rate; });
        b["encoder.warmup_fraction"] = number<double>([](auto& c) -> auto& { return c.encoder.warmup_fraction; });
        b["encoder.hard_negatives"] = number<std::size_t>([](auto& c) -> auto& { return c.encoder.hard_negatives; });
        b["encoder.min_words"] = number<std::size_t>([](auto& c) -> auto& { return c.encoder.min_words; });
        b["encoder.grad_clip"] = number<double>([](auto& c) -> auto& { return c.encoder.grad_clip; });

        b["filter.threshold"] = number<double>([](auto& c) -> auto& { return c.filter.threshold; });
        b["filter.min_words"] = number<std::size_t>([](auto& c) -> auto& { return c.filter.min_words; });

        b["gateway.backend"] = string([](auto& c) -> auto& { return c.gateway.backend; });
        b["gateway.url_env"] = string([](auto& c) -> auto& { return c.gateway.url_env; });
        b["gateway.key_env"] = string([](auto& c) -> auto& { return c.gateway.key_env; });
        b["gateway.model"] = string([](auto& c) -> auto& { return c.gateway.gateway.model; });
        b["gateway.judge_model"] = string([](auto& c) -> auto& { return c.gateway.gateway.judge_model; });
        b["gateway.temperature"] = number<double>([](auto& c) -> auto& { return c.gateway.gateway.temperature; });
        b["gateway.max_tokens"] = number<std::size_t>([](auto& c) -> auto& { return c.gateway.gateway.max_tokens; });
        b["gateway.max_in_flight"] = number<std::size_t>([](auto& c) -> auto& { return c.gateway.gateway.max_in_flight; });
        b["gateway.cache"] = boolean([](auto& c) -> auto& { return c.gateway.cache; });
        b["gateway.cache_dir"] = path([](auto& c) -> auto& { return c.gateway.cache_dir; });
        b["gateway.session_log"] = path([](auto& c) -> auto& { return c.gateway.session_log; });
        b["gateway.replay_log"] = path([](auto& c) -> auto& { return c.gateway.replay_log; });
        b["gateway.prompts_dir"] = path([](auto& c) -> auto& { return c.gateway.prompts_dir; });

        b["invgen.heldout_fraction"] = number<double>([](auto& c) -> auto& { return c.invgen.heldout_fraction; });
        b["invgen.bench_fraction"] = number<double>([](auto& c) -> auto& { return c.invgen.bench_fraction; });
        b["invgen.max_train_examples"] = number<std::size_t>([](auto& c) -> auto& { return c.invgen.max_train_examples; });

        b["slm.vocab_size"] = number<std::size_t>([](auto& c) -> auto& { return c.slm.vocab_size; });
        b["slm.dim"] = number<std::size_t>([](auto& c) -> auto& { return c.slm.d_model; });
        b["slm.layers"] = number<std::size_t>([](auto& c) -> auto& { return c.slm.n_layers; });
        b["slm.heads"] = number<std::size_t>([](auto& c) -> auto& { return c.slm.n_heads; });
        b["slm.max_seq_len"] = number<std::size_t>([](auto& c) -> auto& { return c.slm.max_seq_len; });
        b["slm.mlp_ratio"] = number<std::size_t>([](auto& c) -> auto& { return c.slm.mlp_ratio; });

        add_train_bindings(b, "sft", &C::sft);
        add_train_bindings(b, "dpo", &C::dpo);

        b["decode.greedy"] = boolean([](auto& c) -> auto& { return c.decode.greedy; });
        b["decode.temperature"] = number<double>([](auto& c) -> auto& { return c.decode.temperature; });
        b["decode.top_k"] = number<std::size_t>([](auto& c) -> auto& { return c.decode.top_k; });
        b["decode.max_new_tokens"] = number<std::size_t>([](auto& c) -> auto& { return c.decode.max_new_tokens; });

        b["eval.benchmark"] = path([](auto& c) -> auto& { return c.eval.benchmark; });
        b["eval.shuffle_refs"] = boolean([](auto& c) -> auto& { return c.eval.shuffle_refs; });
        b["eval.seed"] = number<std::uint64_t>([](auto& c) -> auto& { return c.eval.seed; });
        b["eval.judge"] = boolean([](auto& c) -> auto& { return c.eval.judge; });
        b["eval.neutral_from"] = string([](auto& c) -> auto& { return c.eval.neutral_from; });
        b["eval.targets"] = Binding{
            [](C& c, const std::string& v, const fs::path&) {
                c.eval.targets.clear();
                std::istringstream in(v);
                std::string item;
                while (std::getline(in, item, ',')) {
                    item = trim(item);
                    if (item != "sft" && item != "dpo") throw InvalidArgument("eval target must be sft or dpo");
                    c.eval.targets.push_back(item);
                }
                if (c.eval.targets.empty()) throw InvalidArgument("eval.targets is empty");
            },
            [](const C& c) { return json(c.eval.targets); }};
        return b;
    }();
    return table;
}

void check(const PipelineConfig& c) {
    if (c.paths.work_dir.empty()) throw InvalidArgument("paths.work_dir is required");
    if (c.invgen.heldout_fraction < 0 || c.invgen.bench_fraction < 0 ||
        c.invgen.heldout_fraction + c.invgen.bench_fraction >= 1.0) {
        throw InvalidArgument("invgen fractions must be non-negative and sum below 1");
    }
    if (c.sft.beta <= 0 || c.dpo.beta <= 0) throw InvalidArgument("beta must be positive");
    for (const auto* t : {&c.sft, &c.dpo}) {
        if (t->warmup_fraction < 0 || t->warmup_fraction >= 1) throw InvalidArgument("warmup_fraction must be in [0, 1)");
    }
    const auto& b = c.gateway.backend;
    if (b != "mock" && b != "http" && b != "replay") throw InvalidArgument("gateway.backend must be mock, http or replay");
    if (c.eval.neutral_from != "summary" && c.eval.neutral_from != "article")
        throw InvalidArgument("eval.neutral_from must be summary or article");
    if (b == "replay" && c.gateway.replay_log.empty()) throw InvalidArgument("replay backend needs gateway.replay_log");
}

}  // namespace

PipelineConfig parse_config(std::string_view text, const fs::path& base_dir) {
    PipelineConfig config;
    std::string section;
    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t line_no = 0;
    bool work_dir_set = false;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        const std::string line = trim(std::string_view(raw).substr(0, hash));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ParseError("unterminated section header", line_no);
            section = trim(std::string_view(line).substr(1, line.size() - 2));
            const std::string prefix = section + ".";
            const auto next = bindings().lower_bound(prefix);
            if (next == bindings().end() || next->first.rfind(prefix, 0) != 0)
                throw ParseError("unknown section [" + section + "]", line_no);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("expected 'key = value'", line_no);
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        const std::string full = section.empty() ? key : section + "." + key;
        auto it = bindings().find(full);
        if (it == bindings().end()) throw ParseError("unknown setting '" + full + "'", line_no);
        try {
            it->second.set(config, value, base_dir);
        } catch (const InvalidArgument& e) {
            throw ParseError(full + ": " + e.what(), line_no);
        }
        work_dir_set = work_dir_set || full == "paths.work_dir";
    }
    if (!work_dir_set) config.paths.work_dir = (base_dir / "work").lexically_normal();
    const fs::path& w = config.paths.work_dir;
    if (config.gateway.cache_dir.empty()) config.gateway.cache_dir = w / "llm_cache";
    if (config.gateway.session_log.empty()) config.gateway.session_log = w / "llm_session.jsonl";
    check(config);
    return config;
}

PipelineConfig load_config(const fs::path& path) {
    if (!fs::exists(path)) throw InvalidArgument("config file not found: " + path.string());
    return parse_config(read_file(path), fs::absolute(path).parent_path());
}

json config_to_json(const PipelineConfig& config) {
    json out = json::object();
    for (const auto& [key, b] : bindings()) out[key] = b.get(config);
    return out;
}

}  // namespace sag::pipeline
