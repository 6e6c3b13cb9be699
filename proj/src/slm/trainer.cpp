#include "sag/slm/trainer.hpp"

#include "sag/common/random.hpp"

#include <numeric>

namespace sag::slm {
namespace {

/// Visits matching parameter and gradient buffers for one optimizer step.
void apply_update(Adam& adam, SLMParams& params, SLMGrad& grad, double lr, double clip) {
    std::vector<std::span<float>> ps;
    std::vector<std::span<double>> gs;
    params.weights.visit([&](const std::string&, MatF& m) { ps.push_back(m.span()); });
    grad.visit([&](const std::string&, MatD& m) { gs.push_back(m.span()); });
    clip_global_norm(gs, clip);
    std::vector<std::span<const double>> cgs(gs.begin(), gs.end());
    adam.step(ps, cgs, lr);
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(mix_seed(seed, epoch));
    rng.shuffle(std::span(order));
    return order;
}

}  // namespace

TrainConfig sft_defaults() { return {}; }

TrainConfig dpo_defaults() {
    TrainConfig c;
    c.learning_rate = 1e-6;
    c.epochs = 1;
    return c;
}

SLMParams sft_train(SLMParams params, const std::vector<SftExample>& dataset, const TrainConfig& config,
                    std::vector<StepLog>* log) {
    if (dataset.empty()) throw InvalidArgument("SFT dataset is empty");
    if (config.batch_size == 0) throw InvalidArgument("batch size must be positive");
    const std::size_t limit = std::min(config.max_seq_len, params.config.max_seq_len);
    std::vector<FormattedExample> formatted;
    formatted.reserve(dataset.size());
    for (const auto& ex : dataset) formatted.push_back(format_sft_example(ex, limit));
    if (config.epochs == 0) return params;

    const std::size_t steps_per_epoch = (formatted.size() + config.batch_size - 1) / config.batch_size;
    const std::size_t total = steps_per_epoch * config.epochs;
    Adam adam;
    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const auto order = epoch_order(formatted.size(), config.seed, epoch);
        for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size, ++step) {
            const std::size_t end = std::min(order.size(), begin + config.batch_size);
            std::size_t n_tokens = 0;
            for (std::size_t i = begin; i < end; ++i) {
                const auto& ex = formatted[order[i]];
                n_tokens += ex.tokens.size() - ex.target_start;
            }
            const double w = 1.0 / static_cast<double>(n_tokens);
            SLMGrad grad(params.config);
            double nll = 0.0;
            for (std::size_t i = begin; i < end; ++i) {
                const auto& ex = formatted[order[i]];
                nll += weighted_nll(params, ex.tokens, ex.target_start, w, &grad);
            }
            const double lr = scheduled_lr(config.learning_rate, config.decay, config.warmup_fraction, step, total);
            apply_update(adam, params, grad, lr, config.grad_clip);
            if (log) log->push_back({step, nll * w, lr, 0.0});
        }
    }
    return params;
}

SLMParams dpo_train(SLMParams params, const SLMParams& reference, const std::vector<PreferencePair>& pairs,
                    const TrainConfig& config, std::vector<StepLog>* log) {
    if (pairs.empty()) throw InvalidArgument("preference dataset is empty");
    if (config.batch_size == 0) throw InvalidArgument("batch size must be positive");
    if (config.beta <= 0.0) throw InvalidArgument("beta must be positive");
    if (params.config.vocab_size != reference.config.vocab_size) {
        throw TokenizerMismatchError("policy and reference vocabularies differ");
    }
    if (config.epochs == 0) return params;

    std::vector<ReferenceLogps> ref;
    ref.reserve(pairs.size());
    for (const auto& p : pairs) ref.push_back(reference_logps(reference, p));

    const std::size_t steps_per_epoch = (pairs.size() + config.batch_size - 1) / config.batch_size;
    const std::size_t total = steps_per_epoch * config.epochs;
    Adam adam;
    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const auto order = epoch_order(pairs.size(), config.seed, epoch);
        for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size, ++step) {
            const std::size_t end = std::min(order.size(), begin + config.batch_size);
            const double inv = 1.0 / static_cast<double>(end - begin);
            SLMGrad grad(params.config);
            double loss = 0.0, margin = 0.0;
            for (std::size_t i = begin; i < end; ++i) {
                auto lg = dpo_loss_grad(params, ref[order[i]], pairs[order[i]], config.beta);
                loss += lg.loss;
                margin += lg.margin;
                std::vector<std::span<double>> dst;
                grad.visit([&](const std::string&, MatD& m) { dst.push_back(m.span()); });
                std::size_t g = 0;
                lg.grad.visit([&](const std::string&, const MatD& m) {
                    auto out = dst[g++];
                    for (std::size_t k = 0; k < out.size(); ++k) out[k] += inv * m.data[k];
                });
            }
            const double lr = scheduled_lr(config.learning_rate, config.decay, config.warmup_fraction, step, total);
            apply_update(adam, params, grad, lr, config.grad_clip);
            if (log) log->push_back({step, loss * inv, lr, margin * inv});
        }
    }
    return params;
}

double mean_reward_margin(const SLMParams& policy, const SLMParams& reference, const std::vector<PreferencePair>& pairs,
                          double beta) {
    if (pairs.empty()) return 0.0;
    double total = 0.0;
    for (const auto& p : pairs) {
        total += implicit_reward(policy, reference, p.prompt, p.chosen, beta) -
                 implicit_reward(policy, reference, p.prompt, p.rejected, beta);
    }
    return total / static_cast<double>(pairs.size());
}

}  // namespace sag::slm
