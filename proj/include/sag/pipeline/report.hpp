#pragma once

#include "sag/eval/benchmark.hpp"

#include <optional>
#include <string>
#include <vector>

namespace sag::pipeline {

/// Name of the eval output for a checkpoint ("sft" or "dpo").
std::string eval_artifact_stem(const std::string& target, bool shuffled);

struct MetricDelta {
    double rouge1 = 0.0, rouge2 = 0.0, rougeL = 0.0, bleu4 = 0.0;  // F1 / score differences
    double factual_rate = 0.0, faithful_rate = 0.0;                 // percentage points
    bool judged = false;
};

/// after - before, per metric.
MetricDelta metric_delta(const eval::MetricReport& before, const eval::MetricReport& after);

struct StageComparison {
    std::vector<std::pair<std::string, eval::MetricReport>> rows;  // "S-SFT", then "+C-DPO"
    std::optional<MetricDelta> delta;                               // needs both rows
    std::vector<std::pair<std::string, eval::MetricReport>> shuffled_rows;
};

/// Reads eval_sft.json / eval_dpo.json (and their shuffled-reference
/// variants) from `work_dir`. Throws InvalidArgument when none exists.
StageComparison load_comparison(const fs::path& work_dir);
std::string format_comparison(const StageComparison& comparison);
json comparison_to_json(const StageComparison& comparison);

}  // namespace sag::pipeline
