#include "sag/slm/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sag::slm {
namespace {

void check_compatible(const SLMParams& a, const SLMParams& b) {
    if (a.config.vocab_size != b.config.vocab_size) {
        throw TokenizerMismatchError("policy and reference vocabularies differ (" +
                                     std::to_string(a.config.vocab_size) + " vs " +
                                     std::to_string(b.config.vocab_size) + ")");
    }
}

Tokens concat(std::span<const Token> a, std::span<const Token> b) {
    Tokens out(a.begin(), a.end());
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

}  // namespace

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

NllPass::NllPass(const SLMParams& params, std::span<const Token> tokens, std::size_t target_start)
    : params_(params), target_start_(target_start) {
    if (target_start == 0) throw InvalidArgument("the first token has no prefix to predict it from");
    if (target_start >= tokens.size()) {
        cache_.tokens.assign(tokens.begin(), tokens.end());
        return;
    }
    const std::size_t T = tokens.size(), V = params.config.vocab_size;
    MatD logits = forward(params, tokens, &cache_, target_start - 1);
    dlogits_ = MatD(T, V);
    for (std::size_t t = target_start; t < T; ++t) {
        const double* row = logits.row(t - 1);
        const double mx = *std::max_element(row, row + V);
        double z = 0.0;
        for (std::size_t v = 0; v < V; ++v) z += std::exp(row[v] - mx);
        const double log_z = mx + std::log(z);
        nll_ += log_z - row[tokens[t]];
        double* drow = dlogits_.row(t - 1);
        for (std::size_t v = 0; v < V; ++v) drow[v] = std::exp(row[v] - log_z);
        drow[tokens[t]] -= 1.0;
    }
}

void NllPass::accumulate(double weight, SLMGrad& grad) const {
    if (target_start_ >= cache_.tokens.size() || weight == 0.0) return;
    MatD scaled = dlogits_;
    for (auto& x : scaled.data) x *= weight;
    backward(params_, cache_, scaled, grad);
}

double weighted_nll(const SLMParams& params, std::span<const Token> tokens, std::size_t target_start, double weight,
                    SLMGrad* grad) {
    if (!grad) {
        if (target_start == 0) throw InvalidArgument("the first token has no prefix to predict it from");
        if (target_start >= tokens.size()) return 0.0;
        const std::size_t T = tokens.size(), V = params.config.vocab_size;
        MatD logits = forward(params, tokens, nullptr, target_start - 1);
        double total = 0.0;
        for (std::size_t t = target_start; t < T; ++t) {
            const double* row = logits.row(t - 1);
            const double mx = *std::max_element(row, row + V);
            double z = 0.0;
            for (std::size_t v = 0; v < V; ++v) z += std::exp(row[v] - mx);
            total += mx + std::log(z) - row[tokens[t]];
        }
        return total;
    }
    NllPass pass(params, tokens, target_start);
    pass.accumulate(weight, *grad);
    return pass.nll();
}

double sft_loss(const SLMParams& params, const FormattedExample& example) {
    const std::size_t n = example.tokens.size() - example.target_start;
    if (n == 0) throw InvalidArgument("example has no target tokens");
    return weighted_nll(params, example.tokens, example.target_start, 1.0, nullptr) / static_cast<double>(n);
}

double sft_loss(const SLMParams& params, const SftExample& example) {
    return sft_loss(params, format_sft_example(example, params.config.max_seq_len));
}

LossGrad sft_loss_grad(const SLMParams& params, const FormattedExample& example) {
    const std::size_t n = example.tokens.size() - example.target_start;
    if (n == 0) throw InvalidArgument("example has no target tokens");
    LossGrad out{0.0, SLMGrad(params.config)};
    const double w = 1.0 / static_cast<double>(n);
    out.loss = weighted_nll(params, example.tokens, example.target_start, w, &out.grad) * w;
    return out;
}

double sequence_logprob(const SLMParams& params, std::span<const Token> context, std::span<const Token> continuation) {
    if (continuation.empty()) return 0.0;
    const Tokens seq = concat(context, continuation);
    return -weighted_nll(params, seq, context.size(), 1.0, nullptr);
}

double implicit_reward(const SLMParams& policy, const SLMParams& reference, std::span<const Token> prompt,
                       std::span<const Token> completion, double beta) {
    check_compatible(policy, reference);
    return beta * (sequence_logprob(policy, prompt, completion) - sequence_logprob(reference, prompt, completion));
}

double dpo_loss(const SLMParams& policy, const SLMParams& reference, const PreferencePair& pair, double beta) {
    const double margin = implicit_reward(policy, reference, pair.prompt, pair.chosen, beta) -
                          implicit_reward(policy, reference, pair.prompt, pair.rejected, beta);
    return softplus(-margin);
}

ReferenceLogps reference_logps(const SLMParams& reference, const PreferencePair& pair) {
    return {sequence_logprob(reference, pair.prompt, pair.chosen),
            sequence_logprob(reference, pair.prompt, pair.rejected)};
}

DpoLossGrad dpo_loss_grad(const SLMParams& policy, const ReferenceLogps& ref, const PreferencePair& pair,
                          double beta) {
    DpoLossGrad out{0.0, 0.0, SLMGrad(policy.config)};
    const Tokens seq_w = concat(pair.prompt, pair.chosen);
    const Tokens seq_l = concat(pair.prompt, pair.rejected);
    const NllPass pass_w(policy, seq_w, pair.prompt.size());
    const NllPass pass_l(policy, seq_l, pair.prompt.size());
    out.margin = beta * ((-pass_w.nll() - ref.chosen) - (-pass_l.nll() - ref.rejected));
    out.loss = softplus(-out.margin);
    // dL/dmargin = -sigmoid(-margin) and margin = beta (log pi_w - log pi_l) + const;
    // NllPass::accumulate adds weight * d(-log pi).
    const double w = beta / (1.0 + std::exp(out.margin));
    pass_w.accumulate(w, out.grad);
    pass_l.accumulate(-w, out.grad);
    return out;
}

}  // namespace sag::slm
