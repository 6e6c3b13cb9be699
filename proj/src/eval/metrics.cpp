#include "sag/eval/metrics.hpp"

#include "sag/text/unicode.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace sag::eval {
namespace {

using NGramCounts = std::map<std::vector<std::string>, std::size_t>;

NGramCounts ngram_counts(std::span<const std::string> tokens, std::size_t n) {
    NGramCounts counts;
    if (tokens.size() < n) return counts;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        ++counts[std::vector<std::string>(tokens.begin() + i, tokens.begin() + i + n)];
    }
    return counts;
}

std::size_t clipped_overlap(const NGramCounts& candidate, const NGramCounts& reference) {
    std::size_t overlap = 0;
    for (const auto& [gram, count] : candidate) {
        auto it = reference.find(gram);
        if (it != reference.end()) overlap += std::min(count, it->second);
    }
    return overlap;
}

double harmonic(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

}  // namespace

PRF rouge_n(std::span<const std::string> candidate, std::span<const std::string> reference, std::size_t n) {
    if (n != 1 && n != 2) throw InvalidArgument("rouge_n supports n = 1 or 2");
    PRF out;
    if (reference.size() < n) {
        out.undefined = true;
        return out;
    }
    if (candidate.size() < n) return out;
    const double overlap = static_cast<double>(clipped_overlap(ngram_counts(candidate, n), ngram_counts(reference, n)));
    out.recall = overlap / static_cast<double>(reference.size() - n + 1);
    out.precision = overlap / static_cast<double>(candidate.size() - n + 1);
    out.f1 = harmonic(out.precision, out.recall);
    return out;
}

PRF rouge_n(std::string_view candidate, std::string_view reference, std::size_t n) {
    return rouge_n(text::tokenize_for_metrics(candidate), text::tokenize_for_metrics(reference), n);
}

PRF rouge_l(std::span<const std::string> candidate, std::span<const std::string> reference) {
    PRF out;
    if (reference.empty()) {
        out.undefined = true;
        return out;
    }
    if (candidate.empty()) return out;
    const double l = static_cast<double>(lcs_length(candidate, reference));
    out.recall = l / static_cast<double>(reference.size());
    out.precision = l / static_cast<double>(candidate.size());
    out.f1 = harmonic(out.precision, out.recall);
    return out;
}

PRF rouge_l(std::string_view candidate, std::string_view reference) {
    return rouge_l(text::tokenize_for_metrics(candidate), text::tokenize_for_metrics(reference));
}

double bleu_4(std::span<const std::string> candidate, std::span<const TokenSeq> references) {
    if (references.empty()) throw InvalidArgument("bleu_4 needs at least one reference");
    if (candidate.empty()) return 0.0;

    double log_sum = 0.0;
    for (std::size_t n = 1; n <= 4; ++n) {
        const NGramCounts cand = ngram_counts(candidate, n);
        NGramCounts max_ref;
        for (const auto& ref : references) {
            for (const auto& [gram, count] : ngram_counts(ref, n)) {
                auto& slot = max_ref[gram];
                slot = std::max(slot, count);
            }
        }
        const std::size_t total = candidate.size() >= n ? candidate.size() - n + 1 : 0;
        const std::size_t clipped = clipped_overlap(cand, max_ref);
        const double numerator = clipped > 0 ? static_cast<double>(clipped) : kBleuEpsilon;
        log_sum += std::log(numerator / static_cast<double>(std::max<std::size_t>(total, 1)));
    }

    const std::size_t c = candidate.size();
    std::size_t r = references.front().size();
    for (const auto& ref : references) {
        const auto d = [&](std::size_t len) { return len > c ? len - c : c - len; };
        if (d(ref.size()) < d(r) || (d(ref.size()) == d(r) && ref.size() < r)) r = ref.size();
    }
    const double bp = c < r ? std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c)) : 1.0;
    return bp * std::exp(log_sum / 4.0);
}

double bleu_4(std::string_view candidate, std::span<const std::string> references) {
    std::vector<TokenSeq> refs;
    refs.reserve(references.size());
    for (const auto& r : references) refs.push_back(text::tokenize_for_metrics(r));
    return bleu_4(text::tokenize_for_metrics(candidate), refs);
}

HallucinationRates hallucination_rates(std::span<const llm::JudgeVerdict> verdicts) {
    if (verdicts.empty()) throw InvalidArgument("no verdicts to aggregate");
    std::size_t factual = 0, faithful = 0;
    for (const auto& v : verdicts) {
        factual += v.factual_hallucinated;
        faithful += v.faithful_hallucinated;
    }
    const double n = static_cast<double>(verdicts.size());
    return {100.0 * static_cast<double>(factual) / n, 100.0 * static_cast<double>(faithful) / n};
}

}  // namespace sag::eval
