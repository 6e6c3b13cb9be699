#include "sag/pipeline/report.hpp"

#include <cstdio>
#include <sstream>

namespace sag::pipeline {
namespace {

std::optional<eval::MetricReport> try_load(const fs::path& path) {
    if (!fs::exists(path)) return std::nullopt;
    return eval::report_from_json(json::parse(read_file(path)).at("metrics"));
}

std::string signed_fixed(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%+.2f", v);
    return buf;
}

json delta_to_json(const MetricDelta& d) {
    json j = {{"rouge1_f1", d.rouge1}, {"rouge2_f1", d.rouge2}, {"rougeL_f1", d.rougeL}, {"bleu4", d.bleu4}};
    j["factual_rate"] = d.judged ? json(d.factual_rate) : json(nullptr);
    j["faithful_rate"] = d.judged ? json(d.faithful_rate) : json(nullptr);
    return j;
}

}  // namespace

std::string eval_artifact_stem(const std::string& target, bool shuffled) {
    return "eval_" + target + (shuffled ? "_shuf" : "");
}

MetricDelta metric_delta(const eval::MetricReport& before, const eval::MetricReport& after) {
    MetricDelta d;
    d.rouge1 = after.rouge1.f1 - before.rouge1.f1;
    d.rouge2 = after.rouge2.f1 - before.rouge2.f1;
    d.rougeL = after.rougeL.f1 - before.rougeL.f1;
    d.bleu4 = after.bleu4 - before.bleu4;
    d.judged = before.judged && after.judged;
    if (d.judged) {
        d.factual_rate = after.factual_rate - before.factual_rate;
        d.faithful_rate = after.faithful_rate - before.faithful_rate;
    }
    return d;
}

StageComparison load_comparison(const fs::path& work_dir) {
    StageComparison c;
    for (bool shuffled : {false, true}) {
        auto& rows = shuffled ? c.shuffled_rows : c.rows;
        const std::string suffix = shuffled ? " (shuffled refs)" : "";
        if (auto sft = try_load(work_dir / (eval_artifact_stem("sft", shuffled) + ".json"))) {
            rows.emplace_back("S-SFT" + suffix, *sft);
        }
        if (auto dpo = try_load(work_dir / (eval_artifact_stem("dpo", shuffled) + ".json"))) {
            rows.emplace_back("+C-DPO" + suffix, *dpo);
        }
    }
    if (c.rows.empty() && c.shuffled_rows.empty()) {
        throw InvalidArgument("no eval results in " + work_dir.string());
    }
    if (c.rows.size() == 2) c.delta = metric_delta(c.rows[0].second, c.rows[1].second);
    return c;
}

std::string format_comparison(const StageComparison& c) {
    std::ostringstream out;
    auto rows = c.rows;
    rows.insert(rows.end(), c.shuffled_rows.begin(), c.shuffled_rows.end());
    out << eval::format_metric_table(rows);
    std::size_t width = 5;
    for (const auto& [label, _] : rows) width = std::max(width, label.size());
    const std::string pad(width - 5, ' ');
    auto cell = [&](const std::string& s) { out << std::string(s.size() < 10 ? 10 - s.size() : 0, ' ') << s; };
    out << "Delta" << pad;
    if (!c.delta) {
        out << "  unavailable (needs both S-SFT and +C-DPO results)\n";
        return out.str();
    }
    const auto& d = *c.delta;
    cell(signed_fixed(100.0 * d.rouge1));
    cell(signed_fixed(100.0 * d.rouge2));
    cell(signed_fixed(100.0 * d.rougeL));
    cell(signed_fixed(100.0 * d.bleu4));
    cell(d.judged ? signed_fixed(d.factual_rate) : "n/a");
    cell(d.judged ? signed_fixed(d.faithful_rate) : "n/a");
    out << '\n';
    return out.str();
}

json comparison_to_json(const StageComparison& c) {
    json rows = json::array();
    for (const auto& [label, m] : c.rows) rows.push_back({{"label", label}, {"metrics", eval::report_to_json(m)}});
    json shuffled = json::array();
    for (const auto& [label, m] : c.shuffled_rows) {
        shuffled.push_back({{"label", label}, {"metrics", eval::report_to_json(m)}});
    }
    return {{"rows", rows}, {"shuffled_rows", shuffled}, {"delta", c.delta ? delta_to_json(*c.delta) : json(nullptr)}};
}

}  // namespace sag::pipeline
