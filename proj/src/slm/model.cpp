#include "sag/slm/model.hpp"

#include "sag/common/error.hpp"
#include "sag/common/hashing.hpp"
#include "sag/common/random.hpp"
#include "sag/common/tensor_io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sag::slm {
namespace {

constexpr std::string_view kMagic = "SAGSLM";
constexpr std::uint32_t kFormatVersion = 1;
constexpr double kNormEps = 1e-5;
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)

double rmsnorm_row(const double* x, const float* gain, std::size_t d, double* y) {
    double sq = 0.0;
    for (std::size_t k = 0; k < d; ++k) sq += x[k] * x[k];
    const double r = std::sqrt(sq / static_cast<double>(d) + kNormEps);
    for (std::size_t k = 0; k < d; ++k) y[k] = x[k] / r * gain[k];
    return r;
}

void rmsnorm_row_backward(const double* x, double r, const float* gain, const double* dy, std::size_t d, double* dx,
                          double* dgain) {
    double dot = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
        const double n = x[k] / r;
        dgain[k] += dy[k] * n;
        dot += dy[k] * gain[k] * n;
    }
    dot /= static_cast<double>(d);
    for (std::size_t k = 0; k < d; ++k) dx[k] += (dy[k] * gain[k] - (x[k] / r) * dot) / r;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + 0.044715 * x * x * x))); }

double gelu_grad(double x) {
    const double t = std::tanh(kGeluC * (x + 0.044715 * x * x * x));
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * 0.044715 * x * x);
}

/// Causal attention for the query at position `t` over keys 0..t.
/// `keys`/`values` are row-major with row stride d. When `probs` is given,
/// head h's weights are written to probs[h].row(t).
void attend_row(const double* q, const double* keys, const double* values, std::size_t t, std::size_t n_heads,
                std::size_t d, double* out, std::vector<MatD>* probs) {
    const std::size_t dh = d / n_heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    std::vector<double> w(t + 1);
    for (std::size_t h = 0; h < n_heads; ++h) {
        const std::size_t off = h * dh;
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t s = 0; s <= t; ++s) {
            const double* kr = keys + s * d + off;
            double acc = 0.0;
            for (std::size_t c = 0; c < dh; ++c) acc += q[off + c] * kr[c];
            w[s] = acc * scale;
            mx = std::max(mx, w[s]);
        }
        double z = 0.0;
        for (std::size_t s = 0; s <= t; ++s) {
            w[s] = std::exp(w[s] - mx);
            z += w[s];
        }
        for (std::size_t c = 0; c < dh; ++c) out[off + c] = 0.0;
        for (std::size_t s = 0; s <= t; ++s) {
            w[s] /= z;
            const double* vr = values + s * d + off;
            for (std::size_t c = 0; c < dh; ++c) out[off + c] += w[s] * vr[c];
        }
        if (probs) std::copy(w.begin(), w.end(), (*probs)[h].row(t));
    }
}

void check_tokens(const ModelConfig& cfg, std::span<const Token> tokens) {
    if (tokens.size() > cfg.max_seq_len) {
        throw LengthOverflowError("sequence of " + std::to_string(tokens.size()) + " tokens exceeds max_seq_len " +
                                  std::to_string(cfg.max_seq_len));
    }
    for (Token t : tokens) {
        if (t >= cfg.vocab_size) throw InvalidArgument("token id " + std::to_string(t) + " outside vocabulary");
    }
}

json config_to_json(const ModelConfig& c) {
    return {{"vocab_size", c.vocab_size}, {"d_model", c.d_model},         {"n_layers", c.n_layers},
            {"n_heads", c.n_heads},       {"max_seq_len", c.max_seq_len}, {"mlp_ratio", c.mlp_ratio}};
}

ModelConfig config_from_json(const json& j) {
    ModelConfig c;
    c.vocab_size = j.at("vocab_size").get<std::size_t>();
    c.d_model = j.at("d_model").get<std::size_t>();
    c.n_layers = j.at("n_layers").get<std::size_t>();
    c.n_heads = j.at("n_heads").get<std::size_t>();
    c.max_seq_len = j.at("max_seq_len").get<std::size_t>();
    c.mlp_ratio = j.at("mlp_ratio").get<std::size_t>();
    return c;
}

}  // namespace

SLMParams init_slm(const ModelConfig& config, std::uint64_t seed) {
    if (config.n_heads == 0 || config.d_model % config.n_heads != 0) {
        throw InvalidArgument("d_model must be a positive multiple of n_heads");
    }
    if (config.vocab_size == 0 || config.max_seq_len == 0) throw InvalidArgument("empty vocabulary or context");
    SLMParams p{config, ModelWeights<float>(config)};
    Rng rng(seed);
    const double std_in = 0.02;
    const double std_out = 0.02 / std::sqrt(2.0 * static_cast<double>(std::max<std::size_t>(config.n_layers, 1)));
    auto fill = [&](MatF& m, double std) {
        for (auto& x : m.data) x = static_cast<float>(std * rng.normal());
    };
    fill(p.weights.token_embedding, std_in);
    fill(p.weights.position_embedding, std_in);
    for (auto& b : p.weights.blocks) {
        std::fill(b.attn_norm.data.begin(), b.attn_norm.data.end(), 1.0f);
        std::fill(b.mlp_norm.data.begin(), b.mlp_norm.data.end(), 1.0f);
        fill(b.wq, std_in);
        fill(b.wk, std_in);
        fill(b.wv, std_in);
        fill(b.wo, std_out);
        fill(b.w_up, std_in);
        fill(b.w_down, std_out);
    }
    std::fill(p.weights.final_norm.data.begin(), p.weights.final_norm.data.end(), 1.0f);
    return p;
}

std::string slm_hash(const SLMParams& params) {
    std::string acc = dump_json(config_to_json(params.config));
    params.weights.visit([&](const std::string& name, const MatF& m) { acc += name + ":" + sha256_hex(m.span()) + ";"; });
    return sha256_hex(acc);
}

void save_slm(const SLMParams& params, const fs::path& path) {
    std::vector<NamedBuffer> buffers;
    params.weights.visit([&](const std::string& name, const MatF& m) { buffers.push_back({name, {m.rows, m.cols}, m.data}); });
    write_checkpoint(path, kMagic, kFormatVersion, {{"config", config_to_json(params.config)}}, buffers);
}

SLMParams load_slm(const fs::path& path) {
    auto ck = read_checkpoint(path, kMagic);
    if (ck.version != kFormatVersion) throw ParseError("unsupported model checkpoint version");
    SLMParams p;
    p.config = config_from_json(ck.meta.at("config"));
    p.weights = ModelWeights<float>(p.config);
    std::size_t i = 0;
    p.weights.visit([&](const std::string& name, MatF& m) {
        if (i >= ck.buffers.size() || ck.buffers[i].name != name || ck.buffers[i].values.size() != m.size()) {
            throw ParseError("model checkpoint layout mismatch at " + name);
        }
        m.data = std::move(ck.buffers[i].values);
        ++i;
    });
    return p;
}

MatD forward(const SLMParams& params, std::span<const Token> tokens, ForwardCache* cache, std::size_t logits_from) {
    const auto& cfg = params.config;
    const auto& w = params.weights;
    check_tokens(cfg, tokens);
    const std::size_t T = tokens.size(), d = cfg.d_model, hd = cfg.hidden_dim(), V = cfg.vocab_size;
    logits_from = std::min(logits_from, T);

    MatD h(T, d);
    for (std::size_t t = 0; t < T; ++t) {
        const float* te = w.token_embedding.row(tokens[t]);
        const float* pe = w.position_embedding.row(t);
        for (std::size_t k = 0; k < d; ++k) h(t, k) = static_cast<double>(te[k]) + static_cast<double>(pe[k]);
    }

    if (cache) {
        cache->tokens.assign(tokens.begin(), tokens.end());
        cache->blocks.assign(w.blocks.size(), {});
        cache->logits_from = logits_from;
    }

    for (std::size_t l = 0; l < w.blocks.size(); ++l) {
        const auto& b = w.blocks[l];
        BlockCache local;
        BlockCache& bc = cache ? cache->blocks[l] : local;
        bc.input = h;
        bc.norm1 = MatD(T, d);
        bc.rms1.resize(T);
        for (std::size_t t = 0; t < T; ++t) bc.rms1[t] = rmsnorm_row(h.row(t), b.attn_norm.data.data(), d, bc.norm1.row(t));
        bc.q = MatD(T, d);
        bc.k = MatD(T, d);
        bc.v = MatD(T, d);
        linear_forward(bc.norm1.data.data(), T, b.wq, bc.q.data.data());
        linear_forward(bc.norm1.data.data(), T, b.wk, bc.k.data.data());
        linear_forward(bc.norm1.data.data(), T, b.wv, bc.v.data.data());
        bc.attn_out = MatD(T, d);
        if (cache) bc.probs.assign(cfg.n_heads, MatD(T, T));
        for (std::size_t t = 0; t < T; ++t) {
            attend_row(bc.q.row(t), bc.k.data.data(), bc.v.data.data(), t, cfg.n_heads, d, bc.attn_out.row(t),
                       cache ? &bc.probs : nullptr);
        }
        MatD proj(T, d);
        linear_forward(bc.attn_out.data.data(), T, b.wo, proj.data.data());
        for (std::size_t i = 0; i < h.data.size(); ++i) h.data[i] += proj.data[i];
        bc.mid = h;

        bc.norm2 = MatD(T, d);
        bc.rms2.resize(T);
        for (std::size_t t = 0; t < T; ++t) bc.rms2[t] = rmsnorm_row(h.row(t), b.mlp_norm.data.data(), d, bc.norm2.row(t));
        bc.up = MatD(T, hd);
        linear_forward(bc.norm2.data.data(), T, b.w_up, bc.up.data.data());
        bc.act = MatD(T, hd);
        for (std::size_t i = 0; i < bc.up.data.size(); ++i) bc.act.data[i] = gelu(bc.up.data[i]);
        MatD down(T, d);
        linear_forward(bc.act.data.data(), T, b.w_down, down.data.data());
        for (std::size_t i = 0; i < h.data.size(); ++i) h.data[i] += down.data[i];
    }

    MatD fnorm(T, d);
    std::vector<double> rms(T);
    for (std::size_t t = 0; t < T; ++t) rms[t] = rmsnorm_row(h.row(t), w.final_norm.data.data(), d, fnorm.row(t));
    MatD logits(T, V);
    if (logits_from < T) linear_forward(fnorm.row(logits_from), T - logits_from, w.output_head, logits.row(logits_from));

    if (cache) {
        cache->final_input = std::move(h);
        cache->final_norm = std::move(fnorm);
        cache->rms_final = std::move(rms);
    }
    return logits;
}

void backward(const SLMParams& params, const ForwardCache& cache, const MatD& dlogits, SLMGrad& grad) {
    const auto& cfg = params.config;
    const auto& w = params.weights;
    const std::size_t T = cache.tokens.size(), d = cfg.d_model, hd = cfg.hidden_dim();
    const std::size_t from = cache.logits_from;
    const std::size_t dh_head = cfg.head_dim();
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh_head));

    MatD dfnorm(T, d);
    if (from < T) {
        linear_backward(cache.final_norm.row(from), dlogits.row(from), T - from, w.output_head, grad.output_head,
                        dfnorm.row(from));
    }
    MatD dh(T, d);
    for (std::size_t t = 0; t < T; ++t) {
        rmsnorm_row_backward(cache.final_input.row(t), cache.rms_final[t], w.final_norm.data.data(), dfnorm.row(t), d,
                             dh.row(t), grad.final_norm.data.data());
    }

    for (std::size_t l = w.blocks.size(); l-- > 0;) {
        const auto& b = w.blocks[l];
        auto& gb = grad.blocks[l];
        const auto& bc = cache.blocks[l];

        // MLP branch; dh holds the gradient of the block output.
        MatD dact(T, hd);
        linear_backward(bc.act.data.data(), dh.data.data(), T, b.w_down, gb.w_down, dact.data.data());
        for (std::size_t i = 0; i < dact.data.size(); ++i) dact.data[i] *= gelu_grad(bc.up.data[i]);
        MatD dnorm2(T, d);
        linear_backward(bc.norm2.data.data(), dact.data.data(), T, b.w_up, gb.w_up, dnorm2.data.data());
        for (std::size_t t = 0; t < T; ++t) {
            rmsnorm_row_backward(bc.mid.row(t), bc.rms2[t], b.mlp_norm.data.data(), dnorm2.row(t), d, dh.row(t),
                                 gb.mlp_norm.data.data());
        }

        // Attention branch; dh now holds the gradient at the residual midpoint.
        MatD dattn(T, d);
        linear_backward(bc.attn_out.data.data(), dh.data.data(), T, b.wo, gb.wo, dattn.data.data());
        MatD dq(T, d), dk(T, d), dv(T, d);
        std::vector<double> dp(T);
        for (std::size_t head = 0; head < cfg.n_heads; ++head) {
            const std::size_t off = head * dh_head;
            const MatD& P = bc.probs[head];
            for (std::size_t t = 0; t < T; ++t) {
                const double* go = dattn.row(t) + off;
                double sum = 0.0;
                for (std::size_t s = 0; s <= t; ++s) {
                    const double p = P(t, s);
                    const double* vr = bc.v.row(s) + off;
                    double* dvr = dv.row(s) + off;
                    double acc = 0.0;
                    for (std::size_t c = 0; c < dh_head; ++c) {
                        acc += go[c] * vr[c];
                        dvr[c] += p * go[c];
                    }
                    dp[s] = acc;
                    sum += p * acc;
                }
                const double* qr = bc.q.row(t) + off;
                double* dqr = dq.row(t) + off;
                for (std::size_t s = 0; s <= t; ++s) {
                    const double ds = P(t, s) * (dp[s] - sum) * scale;
                    if (ds == 0.0) continue;
                    const double* kr = bc.k.row(s) + off;
                    double* dkr = dk.row(s) + off;
                    for (std::size_t c = 0; c < dh_head; ++c) {
                        dqr[c] += ds * kr[c];
                        dkr[c] += ds * qr[c];
                    }
                }
            }
        }
        MatD dnorm1(T, d);
        linear_backward(bc.norm1.data.data(), dq.data.data(), T, b.wq, gb.wq, dnorm1.data.data());
        linear_backward(bc.norm1.data.data(), dk.data.data(), T, b.wk, gb.wk, dnorm1.data.data());
        linear_backward(bc.norm1.data.data(), dv.data.data(), T, b.wv, gb.wv, dnorm1.data.data());
        for (std::size_t t = 0; t < T; ++t) {
            rmsnorm_row_backward(bc.input.row(t), bc.rms1[t], b.attn_norm.data.data(), dnorm1.row(t), d, dh.row(t),
                                 gb.attn_norm.data.data());
        }
    }

    for (std::size_t t = 0; t < T; ++t) {
        double* te = grad.token_embedding.row(cache.tokens[t]);
        double* pe = grad.position_embedding.row(t);
        const double* g = dh.row(t);
        for (std::size_t k = 0; k < d; ++k) {
            te[k] += g[k];
            pe[k] += g[k];
        }
    }
}

IncrementalDecoder::IncrementalDecoder(const SLMParams& params) : params_(params) {
    const auto& cfg = params.config;
    keys_.assign(cfg.n_layers, MatD(cfg.max_seq_len, cfg.d_model));
    values_.assign(cfg.n_layers, MatD(cfg.max_seq_len, cfg.d_model));
    logits_.resize(cfg.vocab_size);
}

const std::vector<double>& IncrementalDecoder::step(Token token) {
    const auto& cfg = params_.config;
    const auto& w = params_.weights;
    if (pos_ >= cfg.max_seq_len) throw LengthOverflowError("decoder context is full");
    if (token >= cfg.vocab_size) throw InvalidArgument("token id " + std::to_string(token) + " outside vocabulary");
    const std::size_t d = cfg.d_model, hd = cfg.hidden_dim(), t = pos_;

    std::vector<double> h(d), a(d), q(d), o(d), proj(d), up(hd), down(d);
    const float* te = w.token_embedding.row(token);
    const float* pe = w.position_embedding.row(t);
    for (std::size_t k = 0; k < d; ++k) h[k] = static_cast<double>(te[k]) + static_cast<double>(pe[k]);

    for (std::size_t l = 0; l < w.blocks.size(); ++l) {
        const auto& b = w.blocks[l];
        rmsnorm_row(h.data(), b.attn_norm.data.data(), d, a.data());
        linear_forward(a.data(), 1, b.wq, q.data());
        linear_forward(a.data(), 1, b.wk, keys_[l].row(t));
        linear_forward(a.data(), 1, b.wv, values_[l].row(t));
        attend_row(q.data(), keys_[l].data.data(), values_[l].data.data(), t, cfg.n_heads, d, o.data(), nullptr);
        linear_forward(o.data(), 1, b.wo, proj.data());
        for (std::size_t k = 0; k < d; ++k) h[k] += proj[k];
        rmsnorm_row(h.data(), b.mlp_norm.data.data(), d, a.data());
        linear_forward(a.data(), 1, b.w_up, up.data());
        for (auto& x : up) x = gelu(x);
        linear_forward(up.data(), 1, b.w_down, down.data());
        for (std::size_t k = 0; k < d; ++k) h[k] += down[k];
    }
    rmsnorm_row(h.data(), w.final_norm.data.data(), d, a.data());
    linear_forward(a.data(), 1, w.output_head, logits_.data());
    ++pos_;
    return logits_;
}

}  // namespace sag::slm
