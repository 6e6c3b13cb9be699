#pragma once

#include "sag/common/io.hpp"
#include "sag/common/tensor.hpp"
#include "sag/slm/tokenizer.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace sag::slm {

struct ModelConfig {
    std::size_t vocab_size = 512;
    std::size_t d_model = 128;
    std::size_t n_layers = 4;
    std::size_t n_heads = 4;
    std::size_t max_seq_len = 2048;
    std::size_t mlp_ratio = 4;

    std::size_t head_dim() const { return d_model / n_heads; }
    std::size_t hidden_dim() const { return d_model * mlp_ratio; }
    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// One pre-norm transformer block: RMSNorm -> causal self-attention ->
/// residual, RMSNorm -> GELU MLP -> residual. No biases.
template <class T>
struct BlockWeights {
    Mat<T> attn_norm, wq, wk, wv, wo;
    Mat<T> mlp_norm, w_up, w_down;
    friend bool operator==(const BlockWeights&, const BlockWeights&) = default;
};

/// Decoder-only transformer weights; float for parameters, double for
/// gradients.
template <class T>
struct ModelWeights {
    Mat<T> token_embedding;     // V x d
    Mat<T> position_embedding;  // max_seq_len x d
    std::vector<BlockWeights<T>> blocks;
    Mat<T> final_norm;   // 1 x d
    Mat<T> output_head;  // V x d

    ModelWeights() = default;
    explicit ModelWeights(const ModelConfig& c)
        : token_embedding(c.vocab_size, c.d_model),
          position_embedding(c.max_seq_len, c.d_model),
          final_norm(1, c.d_model),
          output_head(c.vocab_size, c.d_model) {
        const std::size_t d = c.d_model, hd = c.hidden_dim();
        for (std::size_t l = 0; l < c.n_layers; ++l) {
            blocks.push_back({Mat<T>(1, d), Mat<T>(d, d), Mat<T>(d, d), Mat<T>(d, d), Mat<T>(d, d), Mat<T>(1, d),
                              Mat<T>(hd, d), Mat<T>(d, hd)});
        }
    }

    template <class F>
    void visit(F&& fn) { visit_impl(*this, fn); }
    template <class F>
    void visit(F&& fn) const { visit_impl(*this, fn); }

    friend bool operator==(const ModelWeights&, const ModelWeights&) = default;

private:
    template <class Self, class F>
    static void visit_impl(Self& s, F& fn) {
        fn("token_embedding", s.token_embedding);
        fn("position_embedding", s.position_embedding);
        for (std::size_t l = 0; l < s.blocks.size(); ++l) {
            const std::string p = "blocks." + std::to_string(l) + ".";
            auto& b = s.blocks[l];
            fn(p + "attn_norm", b.attn_norm);
            fn(p + "wq", b.wq);
            fn(p + "wk", b.wk);
            fn(p + "wv", b.wv);
            fn(p + "wo", b.wo);
            fn(p + "mlp_norm", b.mlp_norm);
            fn(p + "w_up", b.w_up);
            fn(p + "w_down", b.w_down);
        }
        fn("final_norm", s.final_norm);
        fn("output_head", s.output_head);
    }
};

using SLMGrad = ModelWeights<double>;

struct SLMParams {
    ModelConfig config;
    ModelWeights<float> weights;
    friend bool operator==(const SLMParams&, const SLMParams&) = default;
};

/// Small-normal initialisation with a zero output head, so a fresh model
/// predicts the uniform distribution over the vocabulary.
SLMParams init_slm(const ModelConfig& config, std::uint64_t seed);

std::string slm_hash(const SLMParams& params);
void save_slm(const SLMParams& params, const fs::path& path);
SLMParams load_slm(const fs::path& path);

struct BlockCache {
    MatD input, norm1, q, k, v, attn_out, mid, norm2, up, act;
    std::vector<double> rms1, rms2;
    std::vector<MatD> probs;  // per head, T x T lower triangle
};

struct ForwardCache {
    Tokens tokens;
    std::vector<BlockCache> blocks;
    MatD final_input, final_norm;
    std::vector<double> rms_final;
    std::size_t logits_from = 0;
};

/// Logits (T x V) for every prefix of `tokens`. Only rows >= logits_from are
/// computed; earlier rows are left zero. Throws LengthOverflowError when the
/// sequence exceeds max_seq_len and InvalidArgument on out-of-vocabulary ids.
MatD forward(const SLMParams& params, std::span<const Token> tokens, ForwardCache* cache = nullptr,
             std::size_t logits_from = 0);

/// Accumulates into `grad` the parameter gradient of a scalar whose
/// derivative w.r.t. the logits is `dlogits` (rows < cache.logits_from must
/// be zero).
void backward(const SLMParams& params, const ForwardCache& cache, const MatD& dlogits, SLMGrad& grad);

/// Token-at-a-time evaluation with cached keys and values; produces the same
/// logits as forward() on the growing prefix.
class IncrementalDecoder {
public:
    explicit IncrementalDecoder(const SLMParams& params);

    /// Appends `token` and returns next-token logits. Throws
    /// LengthOverflowError past max_seq_len.
    const std::vector<double>& step(Token token);
    std::size_t position() const { return pos_; }

private:
    const SLMParams& params_;
    std::vector<MatD> keys_, values_;
    std::size_t pos_ = 0;
    std::vector<double> logits_;
};

}  // namespace sag::slm
