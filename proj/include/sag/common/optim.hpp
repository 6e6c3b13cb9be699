#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace sag {

struct AdamOptions {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Adam over a flat list of parameter groups. Moments are kept in double so
/// repeated runs with identical inputs produce identical float parameters.
class Adam {
public:
    explicit Adam(AdamOptions opts = {}) : opts_(opts) {}

    /// `params[g]` and `grads[g]` must keep the same sizes across calls.
    void step(std::span<const std::span<float>> params, std::span<const std::span<const double>> grads,
              double lr) {
        if (m_.empty()) {
            for (auto p : params) {
                m_.emplace_back(p.size(), 0.0);
                v_.emplace_back(p.size(), 0.0);
            }
        }
        ++t_;
        const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
        for (std::size_t g = 0; g < params.size(); ++g) {
            auto p = params[g];
            auto grad = grads[g];
            auto& m = m_[g];
            auto& v = v_[g];
            for (std::size_t i = 0; i < p.size(); ++i) {
                m[i] = opts_.beta1 * m[i] + (1.0 - opts_.beta1) * grad[i];
                v[i] = opts_.beta2 * v[i] + (1.0 - opts_.beta2) * grad[i] * grad[i];
                const double mhat = m[i] / bc1;
                const double vhat = v[i] / bc2;
                p[i] = static_cast<float>(static_cast<double>(p[i]) - lr * mhat / (std::sqrt(vhat) + opts_.eps));
            }
        }
    }

    std::size_t steps() const { return t_; }

private:
    AdamOptions opts_;
    std::vector<std::vector<double>> m_, v_;
    std::size_t t_ = 0;
};

enum class DecayShape { Constant, Cosine, Linear };

/// Linear warm-up over the first `warmup_fraction` of steps, then `shape`.
inline double scheduled_lr(double peak, DecayShape shape, double warmup_fraction, std::size_t step,
                           std::size_t total_steps) {
    if (total_steps == 0) return peak;
    const auto warmup = static_cast<std::size_t>(std::ceil(warmup_fraction * static_cast<double>(total_steps)));
    if (step < warmup) return peak * static_cast<double>(step + 1) / static_cast<double>(warmup);
    if (shape == DecayShape::Constant) return peak;
    const std::size_t span = total_steps > warmup ? total_steps - warmup : 1;
    const double progress = static_cast<double>(step - warmup) / static_cast<double>(span);
    if (shape == DecayShape::Linear) return peak * (1.0 - progress);
    return peak * 0.5 * (1.0 + std::cos(M_PI * progress));
}

/// Rescales all gradients so their global L2 norm is at most `max_norm`.
/// Returns the pre-clip norm. `max_norm <= 0` disables clipping.
inline double clip_global_norm(std::span<const std::span<double>> grads, double max_norm) {
    double sq = 0.0;
    for (auto g : grads)
        for (double x : g) sq += x * x;
    const double norm = std::sqrt(sq);
    if (max_norm > 0.0 && norm > max_norm) {
        const double scale = max_norm / norm;
        for (auto g : grads)
            for (double& x : g) x *= scale;
    }
    return norm;
}

}  // namespace sag
