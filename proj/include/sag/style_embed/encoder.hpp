#pragma once

#include "sag/common/io.hpp"
#include "sag/common/tensor.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sag {

struct EncoderConfig {
    std::size_t vocab_buckets = 4096;  // hashed word-unit vocabulary
    std::size_t dim = 64;
    std::size_t layers = 2;

    friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

template <class T>
struct EncoderLayer {
    Mat<T> weight;  // dim x dim
    Mat<T> bias;    // 1 x dim
    friend bool operator==(const EncoderLayer&, const EncoderLayer&) = default;
};

/// Mean-pooled hashed token embeddings followed by residual tanh layers.
/// Instantiated with float for parameters and double for gradients.
template <class T>
struct EncoderWeights {
    Mat<T> token_embedding;  // vocab_buckets x dim
    std::vector<EncoderLayer<T>> layers;

    EncoderWeights() = default;
    explicit EncoderWeights(const EncoderConfig& cfg) : token_embedding(cfg.vocab_buckets, cfg.dim) {
        for (std::size_t l = 0; l < cfg.layers; ++l) layers.push_back({Mat<T>(cfg.dim, cfg.dim), Mat<T>(1, cfg.dim)});
    }

    template <class F>
    void visit(F&& fn) { visit_impl(*this, fn); }
    template <class F>
    void visit(F&& fn) const { visit_impl(*this, fn); }

    friend bool operator==(const EncoderWeights&, const EncoderWeights&) = default;

private:
    template <class Self, class F>
    static void visit_impl(Self& self, F& fn) {
        fn("token_embedding", self.token_embedding);
        for (std::size_t l = 0; l < self.layers.size(); ++l) {
            fn("layers." + std::to_string(l) + ".weight", self.layers[l].weight);
            fn("layers." + std::to_string(l) + ".bias", self.layers[l].bias);
        }
    }
};

using EncoderGrad = EncoderWeights<double>;

struct EncoderParams {
    EncoderConfig config;
    EncoderWeights<float> weights;
    std::int64_t version = 0;

    friend bool operator==(const EncoderParams&, const EncoderParams&) = default;
};

EncoderParams init_encoder(const EncoderConfig& config, std::uint64_t seed);

/// Unit-normalised style embedding.
struct StyleVector {
    std::vector<double> values;
};

/// Hashed vocabulary ids of the word units of `text`.
std::vector<std::size_t> encoder_token_ids(const EncoderConfig& config, std::string_view text);

/// Throws InvalidArgument when the text has no word units.
StyleVector encode(const EncoderParams& params, std::string_view text);

/// Dot product of unit vectors clamped to [-1, 1]. Throws on size mismatch.
double cosine_sim(const StyleVector& u, const StyleVector& v);

/// Forward state of one encoded text, kept for backpropagation.
struct EncodeTrace {
    std::vector<std::size_t> tokens;
    std::vector<std::vector<double>> hidden;      // layers + 1 entries
    std::vector<std::vector<double>> activation;  // tanh outputs per layer
    double norm = 0.0;
    StyleVector output;
};

EncodeTrace encode_traced(const EncoderParams& params, std::string_view text);
/// Accumulates into `grad` the gradient of a scalar whose derivative w.r.t.
/// the output vector is `d_output`.
void encode_backward(const EncoderParams& params, const EncodeTrace& trace, std::span<const double> d_output,
                     EncoderGrad& grad);

std::string encoder_hash(const EncoderParams& params);
void save_encoder(const EncoderParams& params, const fs::path& path);
EncoderParams load_encoder(const fs::path& path);

}  // namespace sag
