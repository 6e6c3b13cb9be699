#include "sag/pipeline/stages.hpp"

#include "sag/common/hashing.hpp"
#include "sag/common/random.hpp"
#include "sag/eval/benchmark.hpp"
#include "sag/pipeline/report.hpp"
#include "sag/slm/preferences.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <set>

namespace sag::pipeline {
namespace {

constexpr std::array<std::pair<Stage, std::string_view>, 9> kStageNames = {{
    {Stage::Ingest, "ingest"},
    {Stage::TrainFilter, "train-filter"},
    {Stage::Filter, "filter"},
    {Stage::Invgen, "invgen"},
    {Stage::Sft, "sft"},
    {Stage::BuildPrefs, "build-prefs"},
    {Stage::Dpo, "dpo"},
    {Stage::Eval, "eval"},
    {Stage::Report, "report"},
}};

// Salts separating the random streams of the stages that consume the
// global seed.
enum SeedSalt : std::uint64_t { kEncoderSeed = 1, kSlmInitSeed, kSftSeed, kDpoSeed, kSplitSeed };

fs::path art(const PipelineConfig& c, const std::string& name) { return c.paths.work_dir / name; }

std::size_t slm_limit(const PipelineConfig& c, const slm::TrainConfig& t) {
    return std::min(c.slm.max_seq_len, t.max_seq_len);
}

fs::path prompts_dir(const PipelineConfig& c) {
    return c.gateway.prompts_dir.empty() ? llm::default_prompts_dir() : c.gateway.prompts_dir;
}

std::vector<fs::path> prompt_files(const PipelineConfig& c) {
    std::vector<fs::path> files;
    const fs::path dir = prompts_dir(c);
    if (!fs::is_directory(dir)) return {dir};
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().extension() == ".prompt") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

json select(const json& flat, std::initializer_list<std::string_view> prefixes) {
    json out = json::object();
    for (const auto& [key, value] : flat.items()) {
        for (auto p : prefixes) {
            if (key == p || (p.back() == '.' && key.rfind(p, 0) == 0)) out[key] = value;
        }
    }
    return out;
}

json gateway_echo(const json& flat) {
    return select(flat, {"gateway.backend", "gateway.model", "gateway.judge_model", "gateway.temperature",
                         "gateway.max_tokens", "gateway.replay_log"});
}

void merge(json& into, const json& from) {
    for (const auto& [k, v] : from.items()) into[k] = v;
}

fs::path bench_path(const PipelineConfig& c) {
    return c.eval.benchmark.empty() ? art(c, "bench.jsonl") : c.eval.benchmark;
}

llm::Gateway make_gateway(const PipelineConfig& c, const RunOptions& o) {
    auto client = o.client ? o.client : make_chat_client(c);
    return llm::Gateway(client, llm::PromptLibrary::load(prompts_dir(c)), c.gateway.gateway);
}

template <class T>
std::vector<T> split_take(std::vector<T>& pool, std::size_t n) {
    n = std::min(n, pool.size());
    std::vector<T> head(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n));
    pool.erase(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n));
    return head;
}

std::string first_error(const std::vector<std::exception_ptr>& errors, std::size_t* count) {
    std::string first;
    *count = 0;
    for (const auto& e : errors) {
        if (!e) continue;
        if ((*count)++ == 0) {
            try {
                std::rethrow_exception(e);
            } catch (const std::exception& ex) {
                first = ex.what();
            }
        }
    }
    return first;
}

// What a stage reads, writes and depends on, and how it produces outputs.
struct StagePlan {
    std::vector<fs::path> inputs;
    std::vector<fs::path> outputs;
    json config = json::object();
    std::function<std::string()> run;
};

StagePlan plan_ingest(const PipelineConfig& c, const json& flat) {
    StagePlan p;
    if (c.paths.corpus.empty()) throw InvalidArgument("paths.corpus is not set");
    p.inputs = {c.paths.corpus};
    p.outputs = {art(c, "corpus.jsonl"), art(c, "corpus_stats.json")};
    p.config = select(flat, {"paths.corpus"});
    p.run = [&c] {
        const Corpus corpus = ingest_corpus(c.paths.corpus);
        write_corpus(corpus, art(c, "corpus.jsonl"));
        const CorpusStats stats = corpus_stats(corpus);
        write_file_atomic(art(c, "corpus_stats.json"), dump_json(stats_to_json(stats), 2) + "\n");
        return std::to_string(stats.num_users) + " users, " + std::to_string(stats.num_articles) + " articles";
    };
    return p;
}

StagePlan plan_train_filter(const PipelineConfig& c, const json& flat) {
    StagePlan p;
    p.inputs = {art(c, "corpus.jsonl")};
    p.outputs = {art(c, "encoder.bin"), art(c, "train_filter_log.csv"), art(c, "encoder_separation.json")};
    p.config = select(flat, {"seed", "encoder."});
    p.run = [&c] {
        const Corpus corpus = ingest_corpus(art(c, "corpus.jsonl"));
        FilterTrainConfig tc = c.encoder;
        tc.seed = mix_seed(c.seed, kEncoderSeed);
        std::vector<StepLog> log;
        const EncoderParams params = train_filter_model(corpus, tc, &log);
        save_encoder(params, art(c, "encoder.bin"));
        write_train_log_csv(log, art(c, "train_filter_log.csv"));
        const StyleSeparation sep = style_separation(params, corpus);
        json j = {{"mean_same_user", sep.mean_same_user}, {"mean_cross_user", sep.mean_cross_user},
                  {"separation", sep.separation()},        {"same_pairs", sep.same_pairs},
                  {"cross_pairs", sep.cross_pairs},        {"steps", log.size()}};
        write_file_atomic(art(c, "encoder_separation.json"), dump_json(j, 2) + "\n");
        return std::to_string(log.size()) + " steps, separation " + std::to_string(sep.separation());
    };
    return p;
}

StagePlan plan_filter(const PipelineConfig& c, const json& flat) {
    StagePlan p;
    p.inputs = {art(c, "corpus.jsonl"), art(c, "encoder.bin")};
    p.outputs = {art(c, "filtered.jsonl")};
    p.config = select(flat, {"filter."});
    p.run = [&c] {
        const Corpus corpus = ingest_corpus(art(c, "corpus.jsonl"));
        const EncoderParams params = load_encoder(art(c, "encoder.bin"));
        write_filtered_dataset(corpus, params, c.filter, art(c, "filtered.jsonl"));
        const auto pairs = read_filtered_dataset(art(c, "filtered.jsonl")).pairs.size();
        return std::to_string(pairs) + " style pairs";
    };
    return p;
}

StagePlan plan_invgen(const PipelineConfig& c, const json& flat, const RunOptions& o) {
    StagePlan p;
    const bool own_bench = c.eval.benchmark.empty();
    p.inputs = {art(c, "corpus.jsonl"), art(c, "filtered.jsonl")};
    for (auto& f : prompt_files(c)) p.inputs.push_back(f);
    p.outputs = {art(c, "sft_train.jsonl"), art(c, "sft_heldout.jsonl"), art(c, "invgen_stats.json")};
    if (own_bench) p.outputs.push_back(art(c, "bench.jsonl"));
    p.config = select(flat, {"seed", "invgen.", "slm.max_seq_len", "sft.max_seq_len", "eval.benchmark"});
    merge(p.config, gateway_echo(flat));
    p.run = [&c, &o, own_bench] {
        const Corpus corpus = ingest_corpus(art(c, "corpus.jsonl"));
        std::map<std::string, const Article*> by_id;
        for (const auto& u : corpus.users())
            for (const auto& a : u.articles) by_id[a.id] = &a;
        const FilteredDataset dataset = read_filtered_dataset(art(c, "filtered.jsonl"));

        std::vector<std::string> targets;
        std::set<std::string> seen;
        for (const auto& pair : dataset.pairs) {
            for (const auto* id : {&pair.reference_id, &pair.target_id}) {
                if (!by_id.count(*id)) throw InvalidArgument("filtered dataset names unknown article " + *id);
            }
            if (seen.insert(pair.target_id).second) targets.push_back(pair.target_id);
        }
        if (targets.empty()) throw InsufficientDataError("the filtered dataset has no pairs");

        // Inverse generation: summary and neutral text per target article.
        const llm::Gateway gateway = make_gateway(c, o);
        std::vector<llm::NeutralizationResult> intent(targets.size());
        const auto errors = gateway.parallel_for(targets.size(), [&](std::size_t i) {
            intent[i] = gateway.simulate_intention(by_id.at(targets[i])->body);
        });
        std::size_t failed = 0;
        const std::string err = first_error(errors, &failed);
        if (failed) throw Error(std::to_string(failed) + " gateway calls failed, first: " + err);
        std::map<std::string, const llm::NeutralizationResult*> intent_of;
        for (std::size_t i = 0; i < targets.size(); ++i) intent_of[targets[i]] = &intent[i];

        // Split by target article so no gold text is trained on.
        std::vector<std::string> order = targets;
        std::sort(order.begin(), order.end());
        Rng rng(mix_seed(c.seed, kSplitSeed));
        rng.shuffle(std::span<std::string>(order));
        const auto count = [&](double f) { return static_cast<std::size_t>(std::llround(f * static_cast<double>(order.size()))); };
        const auto held_ids = split_take(order, count(c.invgen.heldout_fraction));
        const auto bench_ids = own_bench ? split_take(order, count(c.invgen.bench_fraction)) : std::vector<std::string>{};
        const std::set<std::string> held(held_ids.begin(), held_ids.end()), bench(bench_ids.begin(), bench_ids.end());

        const std::size_t limit = slm_limit(c, c.sft);
        std::vector<slm::SftRecord> train, heldout;
        std::vector<eval::NoteBenchCase> cases;
        std::size_t too_long = 0;
        for (const auto& pair : dataset.pairs) {
            const auto& in = *intent_of.at(pair.target_id);
            slm::SftRecord r{pair.user_id,   pair.reference_id, pair.target_id,
                             in.summary,     in.neutral_text,   by_id.at(pair.reference_id)->body,
                             by_id.at(pair.target_id)->body};
            try {
                slm::format_sft_example(slm::to_example(r), limit);
            } catch (const LengthOverflowError&) {
                ++too_long;
                continue;
            }
            if (bench.count(pair.target_id)) {
                cases.push_back({pair.target_id + "<" + pair.reference_id, r.summary, r.reference, r.target, r.user_id});
            } else if (held.count(pair.target_id)) {
                heldout.push_back(std::move(r));
            } else {
                train.push_back(std::move(r));
            }
        }
        if (c.invgen.max_train_examples && train.size() > c.invgen.max_train_examples) {
            rng.shuffle(std::span<slm::SftRecord>(train));
            train.resize(c.invgen.max_train_examples);
        }
        if (train.empty()) throw InsufficientDataError("no training examples left after the split");

        slm::write_sft_records(train, art(c, "sft_train.jsonl"));
        slm::write_sft_records(heldout, art(c, "sft_heldout.jsonl"));
        if (own_bench) eval::write_benchmark(cases, art(c, "bench.jsonl"));
        json stats = {{"pairs", dataset.pairs.size()}, {"target_articles", targets.size()},
                      {"train", train.size()},        {"heldout", heldout.size()},
                      {"bench", cases.size()},        {"dropped_too_long", too_long}};
        write_file_atomic(art(c, "invgen_stats.json"), dump_json(stats, 2) + "\n");
        return std::to_string(train.size()) + " train / " + std::to_string(heldout.size()) + " held-out / " +
               std::to_string(cases.size()) + " bench examples";
    };
    return p;
}

StagePlan plan_sft(const PipelineConfig& c, const json& flat) {
    StagePlan p;
    p.inputs = {art(c, "sft_train.jsonl")};
    p.outputs = {art(c, "slm_sft.bin"), art(c, "sft_log.csv")};
    p.config = select(flat, {"seed", "slm.", "sft."});
    p.run = [&c] {
        std::vector<slm::SftExample> examples;
        for (const auto& r : slm::read_sft_records(art(c, "sft_train.jsonl"))) examples.push_back(slm::to_example(r));
        slm::TrainConfig tc = c.sft;
        tc.seed = mix_seed(c.seed, kSftSeed);
        std::vector<StepLog> log;
        const slm::SLMParams params = slm::sft_train(slm::init_slm(c.slm, mix_seed(c.seed, kSlmInitSeed)), examples, tc, &log);
        slm::save_slm(params, art(c, "slm_sft.bin"));
        write_train_log_csv(log, art(c, "sft_log.csv"));
        return std::to_string(log.size()) + " steps, final loss " + (log.empty() ? "n/a" : std::to_string(log.back().loss));
    };
    return p;
}

StagePlan plan_build_prefs(const PipelineConfig& c, const json& flat, const RunOptions& o) {
    StagePlan p;
    p.inputs = {art(c, "slm_sft.bin"), art(c, "sft_heldout.jsonl")};
    for (auto& f : prompt_files(c)) p.inputs.push_back(f);
    p.outputs = {art(c, "prefs.jsonl"), art(c, "prefs_stats.json")};
    p.config = select(flat, {"decode.", "slm.max_seq_len", "dpo.max_seq_len"});
    merge(p.config, gateway_echo(flat));
    p.run = [&c, &o] {
        const slm::SLMParams params = slm::load_slm(art(c, "slm_sft.bin"));
        const auto heldout = slm::read_sft_records(art(c, "sft_heldout.jsonl"));
        const llm::Gateway gateway = make_gateway(c, o);
        std::vector<slm::PreferenceRecord> pairs;
        const auto stats = slm::build_preference_dataset(params, heldout, gateway, c.decode, slm_limit(c, c.dpo),
                                                         [&](const slm::PreferenceRecord& r) { pairs.push_back(r); });
        slm::write_preference_records(pairs, art(c, "prefs.jsonl"));
        json j = {{"examples", stats.examples},
                  {"pairs", stats.pairs},
                  {"dropped_unchanged", stats.dropped_unchanged},
                  {"dropped_invalid", stats.dropped_invalid},
                  {"failures", stats.failures}};
        write_file_atomic(art(c, "prefs_stats.json"), dump_json(j, 2) + "\n");
        if (!stats.failures.empty()) {
            throw Error(std::to_string(stats.failures.size()) + " examples failed (partial results kept), first: " +
                        stats.failures.front());
        }
        return std::to_string(stats.pairs) + " preference pairs from " + std::to_string(stats.examples) +
               " held-out examples";
    };
    return p;
}

StagePlan plan_dpo(const PipelineConfig& c, const json& flat) {
    StagePlan p;
    p.inputs = {art(c, "slm_sft.bin"), art(c, "prefs.jsonl")};
    p.outputs = {art(c, "slm_dpo.bin"), art(c, "dpo_log.csv"), art(c, "dpo_stats.json")};
    p.config = select(flat, {"seed", "dpo.", "slm.max_seq_len"});
    p.run = [&c] {
        const slm::SLMParams reference = slm::load_slm(art(c, "slm_sft.bin"));
        const std::size_t limit = slm_limit(c, c.dpo);
        std::vector<slm::PreferencePair> pairs;
        for (const auto& r : slm::read_preference_records(art(c, "prefs.jsonl"))) pairs.push_back(slm::to_pair(r, limit));
        if (pairs.empty()) throw InsufficientDataError("no preference pairs to train on");
        slm::TrainConfig tc = c.dpo;
        tc.seed = mix_seed(c.seed, kDpoSeed);
        const std::string ref_hash = slm::slm_hash(reference);
        const double before = slm::mean_reward_margin(reference, reference, pairs, tc.beta);
        std::vector<StepLog> log;
        const slm::SLMParams policy = slm::dpo_train(reference, reference, pairs, tc, &log);
        const double after = slm::mean_reward_margin(policy, reference, pairs, tc.beta);
        if (slm::slm_hash(reference) != ref_hash) throw Error("reference model changed during training");
        slm::save_slm(policy, art(c, "slm_dpo.bin"));
        write_train_log_csv(log, art(c, "dpo_log.csv"));
        json j = {{"pairs", pairs.size()}, {"margin_before", before}, {"margin_after", after},
                  {"reference_sha256", ref_hash}, {"steps", log.size()}};
        write_file_atomic(art(c, "dpo_stats.json"), dump_json(j, 2) + "\n");
        return std::to_string(pairs.size()) + " pairs, reward margin " + std::to_string(before) + " -> " +
               std::to_string(after);
    };
    return p;
}

StagePlan plan_eval(const PipelineConfig& c, const json& flat, const RunOptions& o) {
    StagePlan p;
    p.inputs = {bench_path(c)};
    for (const auto& t : c.eval.targets) {
        p.inputs.push_back(art(c, "slm_" + t + ".bin"));
        const std::string stem = eval_artifact_stem(t, c.eval.shuffle_refs);
        p.outputs.push_back(art(c, stem + ".json"));
        p.outputs.push_back(art(c, stem + ".csv"));
    }
    for (auto& f : prompt_files(c)) p.inputs.push_back(f);
    p.config = select(flat, {"eval.", "decode.", "slm.max_seq_len"});
    merge(p.config, gateway_echo(flat));
    p.run = [&c, &o] {
        auto cases = eval::read_benchmark(bench_path(c));
        if (cases.empty()) throw InsufficientDataError("the benchmark has no cases");
        if (c.eval.shuffle_refs) cases = eval::shuffle_references(std::move(cases), c.eval.seed);
        const llm::Gateway gateway = make_gateway(c, o);

        const bool from_article = c.eval.neutral_from == "article";
        std::vector<std::string> neutral(cases.size());
        const auto errors = gateway.parallel_for(cases.size(), [&](std::size_t i) {
            neutral[i] = gateway.neutralize(from_article ? cases[i].gold_article : cases[i].summary);
        });
        std::map<std::string, std::size_t> index;
        for (std::size_t i = 0; i < cases.size(); ++i) index[cases[i].case_id] = i;

        std::string summary;
        for (const auto& t : c.eval.targets) {
            const slm::SLMParams params = slm::load_slm(art(c, "slm_" + t + ".bin"));
            const std::size_t limit = std::min(c.slm.max_seq_len, params.config.max_seq_len);
            auto generator = [&](const eval::NoteBenchCase& bc) {
                const std::size_t i = index.at(bc.case_id);
                if (errors[i]) std::rethrow_exception(errors[i]);
                const auto prompt = slm::format_prompt(slm::encode_text(bc.summary), slm::encode_text(neutral[i]),
                                                       slm::encode_text(bc.style_reference), limit);
                return slm::sanitize_generated(slm::generate_text(params, prompt, c.decode));
            };
            eval::Judge judge;
            if (c.eval.judge) {
                judge = [&](const std::string& generated, const eval::NoteBenchCase& bc) {
                    return gateway.judge_hallucination(generated, bc.summary, bc.style_reference);
                };
            }
            const auto result = eval::run_benchmark(cases, generator, judge, {c.gateway.gateway.max_in_flight});
            const std::string stem = eval_artifact_stem(t, c.eval.shuffle_refs);
            json j = {{"target", t}, {"shuffled_refs", c.eval.shuffle_refs}, {"metrics", eval::report_to_json(result.report)}};
            write_file_atomic(art(c, stem + ".json"), dump_json(j, 2) + "\n");
            eval::write_case_csv(result.cases, art(c, stem + ".csv"));
            summary += (summary.empty() ? "" : "; ") + t + ": " + std::to_string(result.report.n_cases) + " cases, " +
                       std::to_string(result.report.n_failed) + " failed";
        }
        return summary;
    };
    return p;
}

StagePlan plan_report(const PipelineConfig& c) {
    StagePlan p;
    for (const auto& t : {"sft", "dpo"}) {
        for (bool shuffled : {false, true}) {
            const fs::path f = art(c, eval_artifact_stem(t, shuffled) + ".json");
            if (fs::exists(f)) p.inputs.push_back(f);
        }
    }
    if (p.inputs.empty()) p.inputs.push_back(art(c, "eval_sft.json"));
    p.outputs = {art(c, "report.txt"), art(c, "report.json")};
    p.run = [&c] {
        const StageComparison cmp = load_comparison(c.paths.work_dir);
        const std::string table = format_comparison(cmp);
        write_file_atomic(art(c, "report.txt"), table);
        write_file_atomic(art(c, "report.json"), dump_json(comparison_to_json(cmp), 2) + "\n");
        return "\n" + table;
    };
    return p;
}

StagePlan plan(Stage s, const PipelineConfig& c, const RunOptions& o) {
    const json flat = config_to_json(c);
    switch (s) {
        case Stage::Ingest: return plan_ingest(c, flat);
        case Stage::TrainFilter: return plan_train_filter(c, flat);
        case Stage::Filter: return plan_filter(c, flat);
        case Stage::Invgen: return plan_invgen(c, flat, o);
        case Stage::Sft: return plan_sft(c, flat);
        case Stage::BuildPrefs: return plan_build_prefs(c, flat, o);
        case Stage::Dpo: return plan_dpo(c, flat);
        case Stage::Eval: return plan_eval(c, flat, o);
        case Stage::Report: return plan_report(c);
    }
    throw InvalidArgument("unknown stage");
}

std::string artifact_key(const PipelineConfig& c, const fs::path& p) {
    const fs::path rel = p.lexically_relative(c.paths.work_dir);
    if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
    return p.generic_string();
}

std::map<std::string, std::string> hash_all(const PipelineConfig& c, const std::vector<fs::path>& files) {
    std::map<std::string, std::string> out;
    for (const auto& f : files) out[artifact_key(c, f)] = sha256_file(f);
    return out;
}

bool up_to_date(const PipelineConfig& c, Stage s, const StageManifest& fresh, const std::vector<fs::path>& outputs) {
    const fs::path mp = manifest_path(c, s);
    if (!fs::exists(mp)) return false;
    StageManifest old;
    try {
        old = manifest_from_json(json::parse(read_file(mp)));
    } catch (const std::exception&) {
        return false;
    }
    if (old.inputs != fresh.inputs || old.config != fresh.config) return false;
    for (const auto& f : outputs) {
        if (!fs::exists(f)) return false;
    }
    return hash_all(c, outputs) == old.outputs;
}

}  // namespace

std::string_view stage_name(Stage stage) {
    for (const auto& [s, name] : kStageNames)
        if (s == stage) return name;
    return "?";
}

Stage parse_stage(std::string_view name) {
    for (const auto& [s, n] : kStageNames)
        if (n == name) return s;
    throw InvalidArgument("unknown stage '" + std::string(name) + "'");
}

const std::vector<Stage>& all_stages() {
    static const std::vector<Stage> stages = [] {
        std::vector<Stage> v;
        for (const auto& [s, _] : kStageNames) v.push_back(s);
        return v;
    }();
    return stages;
}

json manifest_to_json(const StageManifest& m) {
    return {{"stage", m.stage}, {"inputs", m.inputs}, {"outputs", m.outputs}, {"wall_time_s", m.wall_time_s},
            {"config", m.config}};
}

StageManifest manifest_from_json(const json& j) {
    StageManifest m;
    m.stage = j.at("stage").get<std::string>();
    m.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
    m.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
    m.wall_time_s = j.at("wall_time_s").get<double>();
    m.config = j.at("config");
    return m;
}

fs::path manifest_path(const PipelineConfig& config, Stage stage) {
    return config.paths.work_dir / "manifests" / (std::string(stage_name(stage)) + ".json");
}

std::shared_ptr<llm::ChatClient> make_chat_client(const PipelineConfig& c) {
    const auto& g = c.gateway;
    std::shared_ptr<llm::ChatClient> client;
    if (g.backend == "mock") {
        client = std::make_shared<llm::RuleMockClient>();
    } else if (g.backend == "replay") {
        return std::make_shared<llm::ReplayClient>(g.replay_log);
    } else {
        const char* url = std::getenv(g.url_env.c_str());
        if (!url || !*url) throw InvalidArgument("environment variable " + g.url_env + " is not set");
        const char* key = std::getenv(g.key_env.c_str());
        llm::HttpClientConfig hc;
        hc.url = url;
        hc.api_key = key ? key : "";
        client = std::make_shared<llm::HttpChatClient>(std::move(hc));
    }
    if (g.cache) client = std::make_shared<llm::CachingClient>(client, g.cache_dir);
    return std::make_shared<llm::RecordingClient>(client, g.session_log);
}

StageResult run_stage(Stage stage, const PipelineConfig& config, const RunOptions& options) {
    const std::string name(stage_name(stage));
    StagePlan p;
    try {
        p = plan(stage, config, options);
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
    for (const auto& f : p.inputs) {
        if (!fs::exists(f)) throw MissingDependencyError(name, f);
    }
    fs::create_directories(config.paths.work_dir / "manifests");

    StageResult result;
    result.manifest.stage = name;
    result.manifest.config = p.config;
    result.manifest.inputs = hash_all(config, p.inputs);
    if (!options.force && up_to_date(config, stage, result.manifest, p.outputs)) {
        result.manifest = manifest_from_json(json::parse(read_file(manifest_path(config, stage))));
        result.no_op = true;
        result.summary = "up to date";
        return result;
    }

    const auto start = std::chrono::steady_clock::now();
    try {
        result.summary = p.run();
    } catch (const MissingDependencyError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
    result.manifest.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.manifest.outputs = hash_all(config, p.outputs);
    write_file_atomic(manifest_path(config, stage), dump_json(manifest_to_json(result.manifest), 2) + "\n");
    return result;
}

std::vector<StageResult> run_all(const PipelineConfig& config, const RunOptions& options) {
    std::vector<StageResult> results;
    for (Stage s : all_stages()) {
        results.push_back(run_stage(s, config, options));
        if (options.log) {
            const auto& r = results.back();
            options.log(std::string(stage_name(s)) + ": " + (r.no_op ? "no-op (up to date)" : r.summary));
        }
    }
    return results;
}

}  // namespace sag::pipeline
