#pragma once

#include "sag/eval/metrics.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace sag::eval {

struct NoteBenchCase {
    std::string case_id;
    std::string summary;
    std::string style_reference;
    std::string gold_article;
    std::string user_id;

    friend bool operator==(const NoteBenchCase&, const NoteBenchCase&) = default;
};

json bench_case_to_json(const NoteBenchCase& c);
/// Throws ParseError on missing or empty fields.
NoteBenchCase bench_case_from_json(const json& j);
std::vector<NoteBenchCase> read_benchmark(const fs::path& path);
void write_benchmark(const std::vector<NoteBenchCase>& cases, const fs::path& path);

using Generator = std::function<std::string(const NoteBenchCase&)>;
using Judge = std::function<llm::JudgeVerdict(const std::string& generated, const NoteBenchCase&)>;

struct CaseResult {
    std::string case_id;
    std::string user_id;
    std::string generated;
    std::string error;  // empty on success
    PRF rouge1, rouge2, rougeL;
    double bleu4 = 0.0;
    std::optional<llm::JudgeVerdict> verdict;

    bool ok() const { return error.empty(); }
};

struct MetricReport {
    PRF rouge1, rouge2, rougeL;
    double bleu4 = 0.0;
    double factual_rate = 0.0;   // percent, 0 when not judged
    double faithful_rate = 0.0;  // percent, 0 when not judged
    bool judged = false;
    std::size_t n_cases = 0;   // successful cases the averages are over
    std::size_t n_failed = 0;
};

struct BenchmarkResult {
    MetricReport report;
    std::vector<CaseResult> cases;  // input order
};

struct BenchmarkOptions {
    /// Concurrent judge calls. Generation always runs sequentially.
    std::size_t judge_parallelism = 1;
};

/// Generates every case, scores it against its gold article and macro
/// averages the per-case values. A throwing generator or judge marks that
/// case failed; the aggregate covers the remaining cases.
BenchmarkResult run_benchmark(const std::vector<NoteBenchCase>& cases, const Generator& generator,
                              const Judge& judge = {}, const BenchmarkOptions& options = {});

/// Uniform mean of the successful cases' values.
MetricReport aggregate(const std::vector<CaseResult>& cases);

json report_to_json(const MetricReport& report);
MetricReport report_from_json(const json& j);
void write_case_csv(const std::vector<CaseResult>& cases, const fs::path& path);
/// One row per (label, report), columns Rouge-1/2/L and BLEU-4 (x100) then
/// the two hallucination rates.
std::string format_metric_table(const std::vector<std::pair<std::string, MetricReport>>& rows);

/// Reassigns style references so that no case receives one written by its
/// own user. Deterministic under `seed`. Tries random permutations first,
/// then a constructive rotation; if one user owns more than half of the
/// cases, references are drawn with replacement from other users. Throws
/// InvalidArgument with fewer than two distinct users.
std::vector<NoteBenchCase> shuffle_references(std::vector<NoteBenchCase> cases, std::uint64_t seed);

}  // namespace sag::eval
