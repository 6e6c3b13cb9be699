#include "sag/slm/generate.hpp"

#include "sag/common/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sag::slm {
namespace {

Token argmax(const std::vector<double>& logits) {
    return static_cast<Token>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

Token sample(const std::vector<double>& logits, const DecodingOptions& opts, Rng& rng) {
    std::vector<std::size_t> idx(logits.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::size_t keep = idx.size();
    if (opts.top_k > 0 && opts.top_k < idx.size()) {
        keep = opts.top_k;
        std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(keep), idx.end(),
                          [&](std::size_t a, std::size_t b) { return logits[a] > logits[b] || (logits[a] == logits[b] && a < b); });
    }
    const double temp = std::max(opts.temperature, 1e-6);
    double mx = -INFINITY;
    for (std::size_t i = 0; i < keep; ++i) mx = std::max(mx, logits[idx[i]]);
    std::vector<double> p(keep);
    double z = 0.0;
    for (std::size_t i = 0; i < keep; ++i) {
        p[i] = std::exp((logits[idx[i]] - mx) / temp);
        z += p[i];
    }
    double u = rng.uniform() * z;
    for (std::size_t i = 0; i < keep; ++i) {
        u -= p[i];
        if (u < 0.0) return static_cast<Token>(idx[i]);
    }
    return static_cast<Token>(idx[keep - 1]);
}

}  // namespace

Tokens generate(const SLMParams& params, std::span<const Token> prompt, const DecodingOptions& options) {
    if (prompt.empty()) throw InvalidArgument("generation needs a non-empty prompt");
    if (prompt.size() > params.config.max_seq_len) {
        throw LengthOverflowError("prompt of " + std::to_string(prompt.size()) + " tokens exceeds max_seq_len");
    }
    Tokens out;
    if (options.max_new_tokens == 0) return out;
    IncrementalDecoder dec(params);
    const std::vector<double>* logits = nullptr;
    for (Token t : prompt) logits = &dec.step(t);
    Rng rng(options.seed);
    while (out.size() < options.max_new_tokens) {
        const Token next = options.greedy ? argmax(*logits) : sample(*logits, options, rng);
        if (is_special(next) || next >= kByteVocabSize) break;
        out.push_back(next);
        if (dec.position() >= params.config.max_seq_len) break;
        logits = &dec.step(next);
    }
    return out;
}

std::string generate_text(const SLMParams& params, std::span<const Token> prompt, const DecodingOptions& options) {
    return decode_text(generate(params, prompt, options));
}

}  // namespace sag::slm
