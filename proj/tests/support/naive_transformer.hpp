#pragma once

// Deliberately plain re-implementation of the decoder forward pass, used as
// an oracle for the optimised model code. Every quantity is recomputed from
// the float weights with explicit loops; nothing is shared with src/slm.

#include "sag/common/random.hpp"
#include "sag/slm/model.hpp"

#include <cmath>
#include <vector>

namespace sag::testing {

using Vec = std::vector<double>;

inline Vec matvec(const Mat<float>& w, const Vec& x) {
    Vec y(w.rows, 0.0);
    for (std::size_t o = 0; o < w.rows; ++o)
        for (std::size_t i = 0; i < w.cols; ++i) y[o] += static_cast<double>(w(o, i)) * x[i];
    return y;
}

inline Vec rmsnorm(const Vec& x, const Mat<float>& gain) {
    double ms = 0.0;
    for (double v : x) ms += v * v;
    ms /= static_cast<double>(x.size());
    const double inv = 1.0 / std::sqrt(ms + 1e-5);
    Vec y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] * inv * gain(0, i);
    return y;
}

inline double gelu_tanh(double x) {
    const double pi = 3.14159265358979323846;
    return 0.5 * x * (1.0 + std::tanh(std::sqrt(2.0 / pi) * (x + 0.044715 * x * x * x)));
}

/// Logits for every position: result[t][v].
inline std::vector<Vec> naive_logits(const slm::SLMParams& p, const std::vector<slm::Token>& tokens) {
    const auto& c = p.config;
    const auto& w = p.weights;
    const std::size_t T = tokens.size(), d = c.d_model, H = c.n_heads, dh = d / H;

    std::vector<Vec> h(T, Vec(d));
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t i = 0; i < d; ++i) h[t][i] = static_cast<double>(w.token_embedding(tokens[t], i)) + static_cast<double>(w.position_embedding(t, i));

    for (const auto& b : w.blocks) {
        std::vector<Vec> q(T), k(T), v(T);
        for (std::size_t t = 0; t < T; ++t) {
            const Vec a = rmsnorm(h[t], b.attn_norm);
            q[t] = matvec(b.wq, a);
            k[t] = matvec(b.wk, a);
            v[t] = matvec(b.wv, a);
        }
        std::vector<Vec> attn(T, Vec(d, 0.0));
        for (std::size_t head = 0; head < H; ++head) {
            for (std::size_t t = 0; t < T; ++t) {
                Vec score(t + 1);
                double mx = -1e300;
                for (std::size_t s = 0; s <= t; ++s) {
                    double dot = 0.0;
                    for (std::size_t j = 0; j < dh; ++j) dot += q[t][head * dh + j] * k[s][head * dh + j];
                    score[s] = dot / std::sqrt(static_cast<double>(dh));
                    mx = std::max(mx, score[s]);
                }
                double z = 0.0;
                for (auto& s : score) z += (s = std::exp(s - mx));
                for (std::size_t s = 0; s <= t; ++s)
                    for (std::size_t j = 0; j < dh; ++j) attn[t][head * dh + j] += score[s] / z * v[s][head * dh + j];
            }
        }
        for (std::size_t t = 0; t < T; ++t) {
            const Vec o = matvec(b.wo, attn[t]);
            for (std::size_t i = 0; i < d; ++i) h[t][i] += o[i];
            Vec up = matvec(b.w_up, rmsnorm(h[t], b.mlp_norm));
            for (auto& x : up) x = gelu_tanh(x);
            const Vec down = matvec(b.w_down, up);
            for (std::size_t i = 0; i < d; ++i) h[t][i] += down[i];
        }
    }
    std::vector<Vec> logits(T);
    for (std::size_t t = 0; t < T; ++t) logits[t] = matvec(w.output_head, rmsnorm(h[t], w.final_norm));
    return logits;
}

/// log softmax(logits)[token], computed directly.
inline double log_prob(const Vec& logits, slm::Token token) {
    double z = 0.0;
    for (double l : logits) z += std::exp(l);
    return logits[token] - std::log(z);
}

/// Sum of log p(tokens[t] | tokens[<t]) for t >= from.
inline double naive_sequence_logprob(const slm::SLMParams& p, const std::vector<slm::Token>& tokens, std::size_t from) {
    const auto logits = naive_logits(p, tokens);
    double total = 0.0;
    for (std::size_t t = from; t < tokens.size(); ++t) total += log_prob(logits[t - 1], tokens[t]);
    return total;
}

/// Fills every parameter with N(0, scale^2) draws (norm gains near 1), so
/// gradients reach all groups.
inline void randomize(slm::SLMParams& p, std::uint64_t seed, double scale = 0.3) {
    Rng rng(seed);
    p.weights.visit([&](const std::string& name, Mat<float>& m) {
        const bool gain = name.find("norm") != std::string::npos;
        for (auto& x : m.data) x = static_cast<float>((gain ? 1.0 : 0.0) + scale * rng.normal());
    });
}

}  // namespace sag::testing
