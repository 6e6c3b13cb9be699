// Command-line entry point for the pipeline stages.
//
//   sag <stage> --config <file> [--force] [--seed N] [--shuffle-refs]
//   sag all     --config <file> [--force] [--seed N] [--shuffle-refs]
//   sag synth   --out <corpus.jsonl> [--users N] [--articles N] [--seed N]

#include "sag/pipeline/stages.hpp"
#include "sag/synthetic/synthetic.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitDependency = 2;

struct StageArgs {
    std::string config;
    bool force = false;
    std::optional<std::uint64_t> seed;
    bool shuffle_refs = false;
};

void add_stage_options(CLI::App* cmd, StageArgs& args) {
    cmd->add_option("--config", args.config, "Pipeline config file")->required()->check(CLI::ExistingFile);
    cmd->add_flag("--force", args.force, "Re-run even when inputs are unchanged");
    cmd->add_option("--seed", args.seed, "Override the global seed");
    cmd->add_flag("--shuffle-refs", args.shuffle_refs, "Evaluate with shuffled style references");
}

sag::pipeline::PipelineConfig resolve(const StageArgs& args) {
    auto config = sag::pipeline::load_config(args.config);
    if (args.seed) config.seed = *args.seed;
    if (args.shuffle_refs) config.eval.shuffle_refs = true;
    return config;
}

void print(const std::string& stage, const sag::pipeline::StageResult& r) {
    std::cout << stage << ": " << (r.no_op ? "no-op (up to date)" : r.summary) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Style-aligned article generation pipeline"};
    app.require_subcommand(1);

    StageArgs stage_args;
    std::vector<std::pair<CLI::App*, sag::pipeline::Stage>> stage_cmds;
    for (auto stage : sag::pipeline::all_stages()) {
        auto* cmd = app.add_subcommand(std::string(sag::pipeline::stage_name(stage)), "Run one pipeline stage");
        add_stage_options(cmd, stage_args);
        stage_cmds.emplace_back(cmd, stage);
    }
    auto* all_cmd = app.add_subcommand("all", "Run every stage in order");
    add_stage_options(all_cmd, stage_args);

    std::string synth_out;
    sag::synthetic::StyleCorpusOptions synth;
    auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic style corpus");
    synth_cmd->add_option("--out", synth_out, "Output JSONL path")->required();
    synth_cmd->add_option("--users", synth.users, "Number of users");
    synth_cmd->add_option("--articles", synth.articles_per_user, "Articles per user");
    synth_cmd->add_option("--seed", synth.seed, "Generator seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // --help exits 0; usage errors share the generic failure code
        return app.exit(e) == 0 ? 0 : kExitFailure;
    }

    try {
        if (synth_cmd->parsed()) {
            const auto corpus = sag::synthetic::make_style_corpus(synth);
            sag::write_corpus(corpus, synth_out);
            std::cout << "wrote " << corpus.size() << " articles to " << synth_out << '\n';
            return 0;
        }
        const auto config = resolve(stage_args);
        if (all_cmd->parsed()) {
            sag::pipeline::RunOptions options{stage_args.force, nullptr, [](const std::string& line) { std::cout << line << '\n'; }};
            sag::pipeline::run_all(config, options);
            return 0;
        }
        for (const auto& [cmd, stage] : stage_cmds) {
            if (!cmd->parsed()) continue;
            const auto result = sag::pipeline::run_stage(stage, config, {stage_args.force, nullptr, {}});
            print(std::string(sag::pipeline::stage_name(stage)), result);
        }
        return 0;
    } catch (const sag::pipeline::MissingDependencyError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitDependency;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}
