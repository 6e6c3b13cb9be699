#pragma once

#include "sag/llm_gateway/gateway.hpp"

#include <span>
#include <string>
#include <vector>

namespace sag::eval {

using TokenSeq = std::vector<std::string>;

struct PRF {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    /// Set when the reference has no n-grams of the requested order, so
    /// recall is undefined; all three values are then 0.
    bool undefined = false;
};

/// Clipped n-gram overlap, n in {1, 2}.
PRF rouge_n(std::span<const std::string> candidate, std::span<const std::string> reference, std::size_t n);
PRF rouge_n(std::string_view candidate, std::string_view reference, std::size_t n);

/// LCS-based precision, recall and F1.
PRF rouge_l(std::span<const std::string> candidate, std::span<const std::string> reference);
PRF rouge_l(std::string_view candidate, std::string_view reference);

/// Bleu smoothing constant used in place of a zero clipped count.
inline constexpr double kBleuEpsilon = 1e-9;

/// Geometric mean of clipped 1..4-gram precisions times the brevity
/// penalty, with the closest reference length (shorter on ties).
double bleu_4(std::span<const std::string> candidate, std::span<const TokenSeq> references);
double bleu_4(std::string_view candidate, std::span<const std::string> references);

struct HallucinationRates {
    double factual_rate = 0.0;   // percent
    double faithful_rate = 0.0;  // percent
};

/// Percentage of verdicts with each flag set. Throws InvalidArgument on an
/// empty list.
HallucinationRates hallucination_rates(std::span<const llm::JudgeVerdict> verdicts);

}  // namespace sag::eval
