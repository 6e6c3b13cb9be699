#include "sag/common/hashing.hpp"
#include "sag/pipeline/config.hpp"
#include "sag/pipeline/report.hpp"
#include "sag/pipeline/stages.hpp"
#include "sag/synthetic/synthetic.hpp"

#include <gtest/gtest.h>

#include <cstdlib>

using namespace sag;
using namespace sag::pipeline;

namespace {

// Small enough that a full run takes a few seconds.
constexpr std::string_view kFastConfig = R"(seed = 3
[paths]
corpus = corpus.jsonl
work_dir = work

[encoder]
dim = 16
epochs = 1
batch_size = 16
learning_rate = 0.01
min_words = 4

[filter]
threshold = 0.5
min_words = 4

[gateway]
backend = mock

[invgen]
heldout_fraction = 0.15
bench_fraction = 0.1
max_train_examples = 48

[slm]
vocab_size = 261
dim = 16
layers = 1
heads = 2
max_seq_len = 256

[sft]
learning_rate = 0.01
epochs = 1
batch_size = 8

[dpo]
learning_rate = 0.001
batch_size = 4

[decode]
max_new_tokens = 24
)";

fs::path fresh_dir(const std::string& name) {
    auto d = fs::temp_directory_path() / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

fs::path setup_run(const std::string& name, std::string_view config_text = kFastConfig) {
    const auto dir = fresh_dir(name);
    write_corpus(synthetic::make_style_corpus({40, 5, 1}), dir / "corpus.jsonl");
    write_file_atomic(dir / "run.conf", config_text);
    return dir / "run.conf";
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(SAG_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

eval::MetricReport report_with(double r1, double factual, double faithful) {
    eval::MetricReport r;
    r.rouge1.f1 = r1;
    r.rouge2.f1 = r1 / 2;
    r.rougeL.f1 = r1 * 0.9;
    r.bleu4 = r1 / 10;
    r.factual_rate = factual;
    r.faithful_rate = faithful;
    r.judged = true;
    r.n_cases = 4;
    return r;
}

void write_eval(const fs::path& dir, const std::string& stem, const eval::MetricReport& r) {
    write_file_atomic(dir / (stem + ".json"), json{{"metrics", eval::report_to_json(r)}}.dump());
}

}  // namespace

TEST(Config, ParsesSectionsAndResolvesPaths) {
    const auto c = parse_config(kFastConfig, "/data/runs");
    EXPECT_EQ(c.seed, 3u);
    EXPECT_EQ(c.paths.corpus, fs::path("/data/runs/corpus.jsonl"));
    EXPECT_EQ(c.paths.work_dir, fs::path("/data/runs/work"));
    EXPECT_EQ(c.gateway.cache_dir, fs::path("/data/runs/work/llm_cache"));
    EXPECT_EQ(c.encoder.encoder.dim, 16u);
    EXPECT_EQ(c.slm.n_heads, 2u);
    EXPECT_DOUBLE_EQ(c.dpo.learning_rate, 0.001);
    EXPECT_EQ(c.dpo.epochs, 1u);
    EXPECT_EQ(c.decode.max_new_tokens, 24u);
    EXPECT_EQ(c.eval.targets, (std::vector<std::string>{"sft", "dpo"}));
}

TEST(Config, DefaultsFollowPaperWhereStated) {
    const auto c = parse_config("[paths]\ncorpus = c.jsonl\n", "/x");
    EXPECT_DOUBLE_EQ(c.sft.learning_rate, 1e-5);
    EXPECT_EQ(c.sft.epochs, 5u);
    EXPECT_DOUBLE_EQ(c.sft.warmup_fraction, 0.01);
    EXPECT_EQ(c.sft.max_seq_len, 2048u);
    EXPECT_DOUBLE_EQ(c.dpo.learning_rate, 1e-6);
    EXPECT_EQ(c.dpo.epochs, 1u);
    EXPECT_DOUBLE_EQ(c.dpo.beta, 0.1);
    EXPECT_EQ(c.gateway.gateway.max_in_flight, 4u);
    EXPECT_TRUE(c.gateway.cache);
    EXPECT_EQ(c.eval.neutral_from, "summary");
}

TEST(Config, ErrorsCarryLineNumbers) {
    auto expect_line = [](std::string_view text, const std::string& needle) {
        try {
            parse_config(text, "/x");
            FAIL() << "expected a throw for: " << text;
        } catch (const ParseError& e) {
            EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
        }
    };
    expect_line("seed = 1\n[sft]\nlearning_rat = 1\n", "3");
    expect_line("[nosuch]\n", "1");
    expect_line("seed = 1\nseed: 2\n", "2");
    expect_line("[sft]\nepochs = many\n", "2");
    EXPECT_THROW(parse_config("[dpo]\nbeta = 0\n", "/x"), Error);
    EXPECT_THROW(parse_config("[gateway]\nbackend = carrier-pigeon\n", "/x"), Error);
    EXPECT_THROW(parse_config("[eval]\nneutral_from = gold\n", "/x"), Error);
}

TEST(Stages, NamesRoundTrip) {
    ASSERT_EQ(all_stages().size(), 9u);
    for (auto s : all_stages()) EXPECT_EQ(parse_stage(stage_name(s)), s);
    EXPECT_EQ(stage_name(Stage::TrainFilter), "train-filter");
    EXPECT_THROW(parse_stage("deploy"), InvalidArgument);
}

TEST(Stages, EvalBeforeSftIsMissingDependency) {
    const auto cfg = load_config(setup_run("sag_pipe_missing"));
    try {
        run_stage(Stage::Eval, cfg);
        FAIL() << "expected a throw";
    } catch (const MissingDependencyError& e) {
        EXPECT_FALSE(e.artifact().empty());
    }
    EXPECT_THROW(run_stage(Stage::Sft, cfg), MissingDependencyError);
}

TEST(Stages, FullRunManifestsNoOpAndForce) {
    const auto cfg = load_config(setup_run("sag_pipe_full"));
    const auto first = run_all(cfg);
    ASSERT_EQ(first.size(), 9u);
    for (const auto& r : first) EXPECT_FALSE(r.no_op) << r.manifest.stage;

    for (auto s : all_stages()) {
        const auto path = manifest_path(cfg, s);
        ASSERT_TRUE(fs::exists(path)) << path;
        const auto m = manifest_from_json(json::parse(read_file(path)));
        EXPECT_EQ(m.stage, stage_name(s));
        EXPECT_FALSE(m.outputs.empty());
        for (const auto& [name, hash] : m.outputs) EXPECT_EQ(sha256_file(cfg.paths.work_dir / name), hash) << name;
        for (const auto& [name, hash] : m.inputs) {
            const fs::path p = fs::path(name).is_absolute() ? fs::path(name) : cfg.paths.work_dir / name;
            EXPECT_EQ(sha256_file(p), hash) << name;
        }
    }

    const auto second = run_all(cfg);
    for (const auto& r : second) EXPECT_TRUE(r.no_op) << r.manifest.stage;

    RunOptions force;
    force.force = true;
    EXPECT_FALSE(run_stage(Stage::Report, cfg, force).no_op);

    // Touching only an eval setting re-runs eval, nothing upstream. The seed
    // is unused without shuffling, so eval's outputs and hence the report
    // stay unchanged.
    auto changed = cfg;
    changed.eval.seed = 99;
    const auto third = run_all(changed);
    for (const auto& r : third) EXPECT_EQ(r.no_op, r.manifest.stage != "eval") << r.manifest.stage;

    // A corrupted output is detected and regenerated.
    write_file_atomic(cfg.paths.work_dir / "report.txt", "tampered");
    EXPECT_FALSE(run_stage(Stage::Report, changed).no_op);
    EXPECT_NE(read_file(cfg.paths.work_dir / "report.txt"), "tampered");
}

TEST(Stages, InternalErrorsNameTheStage) {
    const auto conf = setup_run("sag_pipe_bad_corpus");
    write_file_atomic(conf.parent_path() / "corpus.jsonl", "{\"id\": \"a\"}\n");
    try {
        run_stage(Stage::Ingest, load_config(conf));
        FAIL() << "expected a throw";
    } catch (const StageError& e) {
        EXPECT_EQ(std::string(e.what()).rfind("ingest:", 0), 0u) << e.what();
    }
}

TEST(Report, TwoRowsWithArithmeticDelta) {
    const auto dir = fresh_dir("sag_report_both");
    const auto sft = report_with(0.30, 40.0, 50.0), dpo = report_with(0.32, 30.0, 45.0);
    write_eval(dir, eval_artifact_stem("sft", false), sft);
    write_eval(dir, eval_artifact_stem("dpo", false), dpo);
    const auto cmp = load_comparison(dir);
    ASSERT_EQ(cmp.rows.size(), 2u);
    EXPECT_EQ(cmp.rows[0].first, "S-SFT");
    EXPECT_EQ(cmp.rows[1].first, "+C-DPO");
    ASSERT_TRUE(cmp.delta);
    EXPECT_DOUBLE_EQ(cmp.delta->rouge1, dpo.rouge1.f1 - sft.rouge1.f1);
    EXPECT_DOUBLE_EQ(cmp.delta->rougeL, dpo.rougeL.f1 - sft.rougeL.f1);
    EXPECT_DOUBLE_EQ(cmp.delta->bleu4, dpo.bleu4 - sft.bleu4);
    EXPECT_DOUBLE_EQ(cmp.delta->factual_rate, -10.0);
    EXPECT_DOUBLE_EQ(cmp.delta->faithful_rate, -5.0);
    const auto table = format_comparison(cmp);
    EXPECT_NE(table.find("Delta"), std::string::npos);
    EXPECT_EQ(comparison_to_json(cmp).at("rows").size(), 2u);
}

TEST(Report, SftOnlyMarksDeltaUnavailable) {
    const auto dir = fresh_dir("sag_report_sft");
    write_eval(dir, eval_artifact_stem("sft", false), report_with(0.3, 10, 10));
    const auto cmp = load_comparison(dir);
    EXPECT_EQ(cmp.rows.size(), 1u);
    EXPECT_FALSE(cmp.delta);
    EXPECT_NE(format_comparison(cmp).find("unavailable"), std::string::npos);
    EXPECT_THROW(load_comparison(fresh_dir("sag_report_none")), InvalidArgument);
}

TEST(Cli, ExitCodes) {
    const auto conf = setup_run("sag_cli_codes").string();
    EXPECT_EQ(run_cli("eval --config " + conf), 2);
    EXPECT_EQ(run_cli("ingest --config " + conf), 0);
    EXPECT_EQ(run_cli("ingest --config " + conf + " --force --seed 9"), 0);
    EXPECT_EQ(run_cli("ingest --config /nonexistent.conf"), 1);
    const auto bad = fs::path(conf).parent_path() / "bad.conf";
    write_file_atomic(bad, "[sft]\nepochs = x\n");
    EXPECT_EQ(run_cli("ingest --config " + bad.string()), 1);
}
