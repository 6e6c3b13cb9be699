#pragma once

#include "sag/slm/model.hpp"

#include <span>

namespace sag::slm {

/// One forward pass over `tokens` scoring positions [target_start, T).
/// Keeps the activations so gradients can be accumulated afterwards with
/// any weight.
class NllPass {
public:
    NllPass(const SLMParams& params, std::span<const Token> tokens, std::size_t target_start);

    /// Summed negative log-likelihood of the scored tokens.
    double nll() const { return nll_; }
    /// grad += weight * d(nll)/d(params)
    void accumulate(double weight, SLMGrad& grad) const;

private:
    const SLMParams& params_;
    std::size_t target_start_;
    ForwardCache cache_;
    MatD dlogits_;
    double nll_ = 0.0;
};

/// Sum of weighted negative log-likelihoods of tokens[t] for t in
/// [target_start, tokens.size()), each predicted from its prefix. When
/// `grad` is non-null, accumulates `weight` times its gradient.
double weighted_nll(const SLMParams& params, std::span<const Token> tokens, std::size_t target_start, double weight,
                    SLMGrad* grad);

/// Mean per-token cross-entropy over the target section (response tokens
/// and the End marker); prompt tokens are masked out.
double sft_loss(const SLMParams& params, const SftExample& example);
double sft_loss(const SLMParams& params, const FormattedExample& example);

struct LossGrad {
    double loss = 0.0;
    SLMGrad grad;
};

LossGrad sft_loss_grad(const SLMParams& params, const FormattedExample& example);

/// log pi(y | x) summed over y's tokens.
double sequence_logprob(const SLMParams& params, std::span<const Token> context, std::span<const Token> continuation);

struct PreferencePair {
    Tokens prompt;    // formatted summary / neutral / reference
    Tokens chosen;    // y_w
    Tokens rejected;  // y_l
};

class TokenizerMismatchError : public Error {
public:
    using Error::Error;
};

/// beta * (log pi_policy(y|x) - log pi_ref(y|x)). Throws
/// TokenizerMismatchError when the vocabularies differ.
double implicit_reward(const SLMParams& policy, const SLMParams& reference, std::span<const Token> prompt,
                       std::span<const Token> completion, double beta);

/// -log sigmoid(r(x, y_w) - r(x, y_l)) in softplus form.
double dpo_loss(const SLMParams& policy, const SLMParams& reference, const PreferencePair& pair, double beta);

/// Frozen reference log-probabilities of a pair's two completions.
struct ReferenceLogps {
    double chosen = 0.0;
    double rejected = 0.0;
};

ReferenceLogps reference_logps(const SLMParams& reference, const PreferencePair& pair);

struct DpoLossGrad {
    double loss = 0.0;
    double margin = 0.0;  // r(x, y_w) - r(x, y_l)
    SLMGrad grad;
};

DpoLossGrad dpo_loss_grad(const SLMParams& policy, const ReferenceLogps& ref, const PreferencePair& pair,
                          double beta);

/// Numerically stable log(1 + exp(z)).
double softplus(double z);

}  // namespace sag::slm
