#pragma once

#include "sag/pipeline/config.hpp"

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace sag::pipeline {

enum class Stage { Ingest, TrainFilter, Filter, Invgen, Sft, BuildPrefs, Dpo, Eval, Report };

std::string_view stage_name(Stage stage);
/// Throws InvalidArgument for unknown names.
Stage parse_stage(std::string_view name);
/// All stages in dependency order.
const std::vector<Stage>& all_stages();

struct StageManifest {
    std::string stage;
    std::map<std::string, std::string> inputs;   // artifact -> sha256
    std::map<std::string, std::string> outputs;  // artifact -> sha256
    double wall_time_s = 0.0;
    json config;  // the settings the stage depends on
};

json manifest_to_json(const StageManifest& m);
StageManifest manifest_from_json(const json& j);

/// An input artifact of a stage does not exist yet.
class MissingDependencyError : public Error {
public:
    MissingDependencyError(std::string stage, fs::path artifact)
        : Error("stage " + stage + " needs " + artifact.string() + ", which does not exist"),
          artifact_(std::move(artifact)) {}
    const fs::path& artifact() const { return artifact_; }

private:
    fs::path artifact_;
};

/// Failure inside a stage; the message starts with the stage name.
class StageError : public Error {
public:
    StageError(std::string_view stage, const std::string& what) : Error(std::string(stage) + ": " + what) {}
};

struct RunOptions {
    bool force = false;
    /// Replaces the client built from the gateway settings (tests).
    std::shared_ptr<llm::ChatClient> client;
    std::function<void(const std::string&)> log;
};

struct StageResult {
    StageManifest manifest;
    bool no_op = false;  // inputs and config unchanged, outputs intact
    std::string summary;
};

/// Runs one stage: checks its inputs exist, skips it when the previous
/// manifest still matches (unless forced), otherwise writes its outputs
/// atomically and then its manifest to <work_dir>/manifests/<stage>.json.
StageResult run_stage(Stage stage, const PipelineConfig& config, const RunOptions& options = {});
/// Every stage in order; stops at the first failure.
std::vector<StageResult> run_all(const PipelineConfig& config, const RunOptions& options = {});

fs::path manifest_path(const PipelineConfig& config, Stage stage);

/// Client stack for the configured backend: mock, http (env-configured) or
/// replay, behind the response cache when enabled, recording every
/// exchange to the session log.
std::shared_ptr<llm::ChatClient> make_chat_client(const PipelineConfig& config);

}  // namespace sag::pipeline
