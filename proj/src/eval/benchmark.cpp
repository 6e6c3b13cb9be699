#include "sag/eval/benchmark.hpp"

#include "sag/common/parallel.hpp"
#include "sag/common/random.hpp"
#include "sag/text/unicode.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

namespace sag::eval {
namespace {

std::string required_text(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string() || it->get_ref<const std::string&>().empty()) {
        throw ParseError(std::string("field '") + key + "' must be a non-empty string");
    }
    return it->get<std::string>();
}

json prf_to_json(const PRF& p) { return {{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}}; }

PRF prf_from_json(const json& j) { return {j.at("precision"), j.at("recall"), j.at("f1"), false}; }

void add_prf(PRF& acc, const PRF& x) {
    acc.precision += x.precision;
    acc.recall += x.recall;
    acc.f1 += x.f1;
}

void scale_prf(PRF& p, double s) {
    p.precision *= s;
    p.recall *= s;
    p.f1 *= s;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

bool valid_assignment(const std::vector<NoteBenchCase>& cases, const std::vector<std::size_t>& source) {
    for (std::size_t i = 0; i < cases.size(); ++i) {
        if (cases[source[i]].user_id == cases[i].user_id) return false;
    }
    return true;
}

}  // namespace

json bench_case_to_json(const NoteBenchCase& c) {
    return {{"case_id", c.case_id},
            {"summary", c.summary},
            {"style_reference", c.style_reference},
            {"gold_article", c.gold_article},
            {"user_id", c.user_id}};
}

NoteBenchCase bench_case_from_json(const json& j) {
    return {required_text(j, "case_id"), required_text(j, "summary"), required_text(j, "style_reference"),
            required_text(j, "gold_article"), required_text(j, "user_id")};
}

std::vector<NoteBenchCase> read_benchmark(const fs::path& path) {
    std::vector<NoteBenchCase> cases;
    for_each_jsonl(path, [&](const json& j, std::size_t line) {
        try {
            cases.push_back(bench_case_from_json(j));
        } catch (const ParseError& e) {
            throw ParseError(e.what(), line);
        }
    });
    return cases;
}

void write_benchmark(const std::vector<NoteBenchCase>& cases, const fs::path& path) {
    AtomicWriter w(path);
    for (const auto& c : cases) w.stream() << dump_json(bench_case_to_json(c)) << '\n';
    w.commit();
}

BenchmarkResult run_benchmark(const std::vector<NoteBenchCase>& cases, const Generator& generator, const Judge& judge,
                              const BenchmarkOptions& options) {
    if (!generator) throw InvalidArgument("benchmark needs a generator");
    BenchmarkResult result;
    result.cases.resize(cases.size());
    for (std::size_t i = 0; i < cases.size(); ++i) {
        CaseResult& r = result.cases[i];
        r.case_id = cases[i].case_id;
        r.user_id = cases[i].user_id;
        try {
            r.generated = generator(cases[i]);
        } catch (const std::exception& e) {
            r.error = std::string("generation failed: ") + e.what();
            continue;
        }
        const auto cand = text::tokenize_for_metrics(r.generated);
        const std::vector<TokenSeq> refs{text::tokenize_for_metrics(cases[i].gold_article)};
        r.rouge1 = rouge_n(cand, refs[0], 1);
        r.rouge2 = rouge_n(cand, refs[0], 2);
        r.rougeL = rouge_l(cand, refs[0]);
        r.bleu4 = bleu_4(cand, refs);
    }

    if (judge) {
        const auto errors = parallel_indexed(cases.size(), options.judge_parallelism, [&](std::size_t i) {
            CaseResult& r = result.cases[i];
            if (!r.ok()) return;
            if (r.generated.empty()) {
                // Nothing was asserted, so nothing can be fabricated; every
                // summary fact is missing.
                r.verdict = llm::JudgeVerdict{false, true, "empty output"};
                return;
            }
            r.verdict = judge(r.generated, cases[i]);
        });
        for (std::size_t i = 0; i < cases.size(); ++i) {
            if (!errors[i]) continue;
            try {
                std::rethrow_exception(errors[i]);
            } catch (const std::exception& e) {
                result.cases[i].error = std::string("judge failed: ") + e.what();
            }
        }
    }
    result.report = aggregate(result.cases);
    return result;
}

MetricReport aggregate(const std::vector<CaseResult>& cases) {
    MetricReport m;
    std::vector<llm::JudgeVerdict> verdicts;
    for (const auto& c : cases) {
        if (!c.ok()) {
            ++m.n_failed;
            continue;
        }
        ++m.n_cases;
        add_prf(m.rouge1, c.rouge1);
        add_prf(m.rouge2, c.rouge2);
        add_prf(m.rougeL, c.rougeL);
        m.bleu4 += c.bleu4;
        if (c.verdict) verdicts.push_back(*c.verdict);
    }
    if (m.n_cases == 0) return m;
    const double s = 1.0 / static_cast<double>(m.n_cases);
    scale_prf(m.rouge1, s);
    scale_prf(m.rouge2, s);
    scale_prf(m.rougeL, s);
    m.bleu4 *= s;
    if (!verdicts.empty()) {
        if (verdicts.size() != m.n_cases) throw InvalidArgument("some successful cases lack a verdict");
        const auto rates = hallucination_rates(verdicts);
        m.factual_rate = rates.factual_rate;
        m.faithful_rate = rates.faithful_rate;
        m.judged = true;
    }
    return m;
}

json report_to_json(const MetricReport& m) {
    return {{"rouge1", prf_to_json(m.rouge1)},
            {"rouge2", prf_to_json(m.rouge2)},
            {"rougeL", prf_to_json(m.rougeL)},
            {"bleu4", m.bleu4},
            {"factual_rate", m.factual_rate},
            {"faithful_rate", m.faithful_rate},
            {"judged", m.judged},
            {"n_cases", m.n_cases},
            {"n_failed", m.n_failed}};
}

MetricReport report_from_json(const json& j) {
    MetricReport m;
    m.rouge1 = prf_from_json(j.at("rouge1"));
    m.rouge2 = prf_from_json(j.at("rouge2"));
    m.rougeL = prf_from_json(j.at("rougeL"));
    m.bleu4 = j.at("bleu4");
    m.factual_rate = j.at("factual_rate");
    m.faithful_rate = j.at("faithful_rate");
    m.judged = j.at("judged");
    m.n_cases = j.at("n_cases");
    m.n_failed = j.at("n_failed");
    return m;
}

void write_case_csv(const std::vector<CaseResult>& cases, const fs::path& path) {
    AtomicWriter w(path);
    auto& out = w.stream();
    out << "case_id,user_id,status,rouge1_p,rouge1_r,rouge1_f1,rouge2_p,rouge2_r,rouge2_f1,"
           "rougeL_p,rougeL_r,rougeL_f1,bleu4,factual,faithful,generated,error\n";
    auto prf = [&](const PRF& p) { out << ',' << fixed(p.precision, 6) << ',' << fixed(p.recall, 6) << ',' << fixed(p.f1, 6); };
    for (const auto& c : cases) {
        out << csv_field(c.case_id) << ',' << csv_field(c.user_id) << ',' << (c.ok() ? "ok" : "failed");
        prf(c.rouge1);
        prf(c.rouge2);
        prf(c.rougeL);
        out << ',' << fixed(c.bleu4, 6) << ',';
        if (c.verdict) out << c.verdict->factual_hallucinated;
        out << ',';
        if (c.verdict) out << c.verdict->faithful_hallucinated;
        out << ',' << csv_field(c.generated) << ',' << csv_field(c.error) << '\n';
    }
    w.commit();
}

std::string format_metric_table(const std::vector<std::pair<std::string, MetricReport>>& rows) {
    std::size_t label_width = 5;
    for (const auto& [label, _] : rows) label_width = std::max(label_width, label.size());
    std::ostringstream out;
    auto cell = [&](const std::string& s) {
        out << std::string(s.size() < 10 ? 10 - s.size() : 0, ' ') << s;
    };
    out << "Model" << std::string(label_width - 5, ' ');
    for (const char* h : {"Rouge-1", "Rouge-2", "Rouge-L", "BLEU-4", "Factual", "Faithful"}) cell(h);
    out << '\n';
    for (const auto& [label, m] : rows) {
        out << label << std::string(label_width - label.size(), ' ');
        cell(fixed(100.0 * m.rouge1.f1, 2));
        cell(fixed(100.0 * m.rouge2.f1, 2));
        cell(fixed(100.0 * m.rougeL.f1, 2));
        cell(fixed(100.0 * m.bleu4, 2));
        cell(m.judged ? fixed(m.factual_rate, 2) : "n/a");
        cell(m.judged ? fixed(m.faithful_rate, 2) : "n/a");
        out << '\n';
    }
    return out.str();
}

std::vector<NoteBenchCase> shuffle_references(std::vector<NoteBenchCase> cases, std::uint64_t seed) {
    const std::size_t n = cases.size();
    std::map<std::string, std::vector<std::size_t>> by_user;
    for (std::size_t i = 0; i < n; ++i) by_user[cases[i].user_id].push_back(i);
    if (by_user.size() < 2) throw InvalidArgument("shuffling references needs at least two distinct users");

    Rng rng(seed);
    std::vector<std::size_t> source(n);
    std::iota(source.begin(), source.end(), 0);
    bool found = false;
    for (int attempt = 0; attempt < 200 && !found; ++attempt) {
        rng.shuffle(std::span<std::size_t>(source));
        found = valid_assignment(cases, source);
    }

    std::size_t largest = 0;
    for (const auto& [_, idx] : by_user) largest = std::max(largest, idx.size());
    if (!found && 2 * largest <= n) {
        // Lay the cases out user by user, largest group first, and take each
        // reference from `largest` positions further on. No group spans that
        // distance, so no case gets its own user's reference.
        std::vector<std::vector<std::size_t>> groups;
        for (auto& [_, idx] : by_user) {
            rng.shuffle(std::span<std::size_t>(idx));
            groups.push_back(idx);
        }
        std::stable_sort(groups.begin(), groups.end(),
                         [](const auto& a, const auto& b) { return a.size() > b.size(); });
        std::vector<std::size_t> order;
        for (const auto& g : groups) order.insert(order.end(), g.begin(), g.end());
        for (std::size_t p = 0; p < n; ++p) source[order[p]] = order[(p + largest) % n];
        found = true;
    }
    if (!found) {
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t j;
            do {
                j = rng.index(n);
            } while (cases[j].user_id == cases[i].user_id);
            source[i] = j;
        }
    }

    std::vector<std::string> refs(n);
    for (std::size_t i = 0; i < n; ++i) refs[i] = cases[source[i]].style_reference;
    for (std::size_t i = 0; i < n; ++i) cases[i].style_reference = std::move(refs[i]);
    return cases;
}

}  // namespace sag::eval
