#include "sag/style_embed/encoder.hpp"

#include "sag/common/error.hpp"
#include "sag/common/hashing.hpp"
#include "sag/common/random.hpp"
#include "sag/common/tensor_io.hpp"
#include "sag/text/unicode.hpp"

#include <algorithm>
#include <cmath>

namespace sag {
namespace {

constexpr std::string_view kMagic = "SAGENC";
constexpr std::uint32_t kFormatVersion = 1;

json config_to_json(const EncoderConfig& c) {
    return {{"vocab_buckets", c.vocab_buckets}, {"dim", c.dim}, {"layers", c.layers}};
}

EncoderConfig config_from_json(const json& j) {
    EncoderConfig c;
    c.vocab_buckets = j.at("vocab_buckets").get<std::size_t>();
    c.dim = j.at("dim").get<std::size_t>();
    c.layers = j.at("layers").get<std::size_t>();
    return c;
}

}  // namespace

EncoderParams init_encoder(const EncoderConfig& config, std::uint64_t seed) {
    if (config.dim == 0 || config.vocab_buckets == 0) throw InvalidArgument("encoder dim and vocabulary must be positive");
    EncoderParams p;
    p.config = config;
    p.weights = EncoderWeights<float>(config);
    Rng rng(seed);
    for (auto& x : p.weights.token_embedding.data) x = static_cast<float>(rng.normal());
    const double w_std = 1.0 / std::sqrt(static_cast<double>(config.dim));
    for (auto& layer : p.weights.layers)
        for (auto& x : layer.weight.data) x = static_cast<float>(w_std * rng.normal());
    return p;
}

std::vector<std::size_t> encoder_token_ids(const EncoderConfig& config, std::string_view text) {
    std::vector<std::size_t> ids;
    for (const auto& tok : text::tokenize_for_metrics(text)) {
        ids.push_back(static_cast<std::size_t>(fnv1a64(tok) % config.vocab_buckets));
    }
    return ids;
}

EncodeTrace encode_traced(const EncoderParams& params, std::string_view text) {
    const std::size_t d = params.config.dim;
    EncodeTrace tr;
    tr.tokens = encoder_token_ids(params.config, text);
    if (tr.tokens.empty()) throw InvalidArgument("text has no word units to encode");

    std::vector<double> h(d, 0.0);
    for (auto id : tr.tokens) {
        const float* row = params.weights.token_embedding.row(id);
        for (std::size_t k = 0; k < d; ++k) h[k] += row[k];
    }
    const double inv_len = 1.0 / static_cast<double>(tr.tokens.size());
    for (auto& x : h) x *= inv_len;
    tr.hidden.push_back(h);

    for (const auto& layer : params.weights.layers) {
        std::vector<double> z(d);
        linear_forward(h.data(), 1, layer.weight, z.data());
        for (std::size_t k = 0; k < d; ++k) {
            z[k] = std::tanh(z[k] + layer.bias.data[k]);
            h[k] += z[k];
        }
        tr.activation.push_back(std::move(z));
        tr.hidden.push_back(h);
    }

    double sq = 0.0;
    for (double x : h) sq += x * x;
    tr.norm = std::sqrt(sq);
    if (tr.norm == 0.0) throw InvalidArgument("encoder produced a zero vector");
    tr.output.values.resize(d);
    for (std::size_t k = 0; k < d; ++k) tr.output.values[k] = h[k] / tr.norm;
    return tr;
}

StyleVector encode(const EncoderParams& params, std::string_view text) {
    return encode_traced(params, text).output;
}

double cosine_sim(const StyleVector& u, const StyleVector& v) {
    if (u.values.size() != v.values.size()) {
        throw InvalidArgument("cosine_sim: dimension mismatch (" + std::to_string(u.values.size()) + " vs " +
                              std::to_string(v.values.size()) + ")");
    }
    double dot = 0.0;
    for (std::size_t k = 0; k < u.values.size(); ++k) dot += u.values[k] * v.values[k];
    return std::clamp(dot, -1.0, 1.0);
}

void encode_backward(const EncoderParams& params, const EncodeTrace& tr, std::span<const double> d_output,
                     EncoderGrad& grad) {
    const std::size_t d = params.config.dim;
    const auto& u = tr.output.values;
    double proj = 0.0;
    for (std::size_t k = 0; k < d; ++k) proj += u[k] * d_output[k];
    std::vector<double> dh(d);
    for (std::size_t k = 0; k < d; ++k) dh[k] = (d_output[k] - u[k] * proj) / tr.norm;

    for (std::size_t l = params.weights.layers.size(); l-- > 0;) {
        const auto& layer = params.weights.layers[l];
        auto& glayer = grad.layers[l];
        const auto& a = tr.activation[l];
        std::vector<double> dz(d);
        for (std::size_t k = 0; k < d; ++k) dz[k] = dh[k] * (1.0 - a[k] * a[k]);
        for (std::size_t k = 0; k < d; ++k) glayer.bias.data[k] += dz[k];
        linear_backward(tr.hidden[l].data(), dz.data(), 1, layer.weight, glayer.weight, dh.data());
    }

    const double inv_len = 1.0 / static_cast<double>(tr.tokens.size());
    for (auto id : tr.tokens) {
        double* row = grad.token_embedding.row(id);
        for (std::size_t k = 0; k < d; ++k) row[k] += dh[k] * inv_len;
    }
}

std::string encoder_hash(const EncoderParams& params) {
    std::string acc;
    params.weights.visit([&](const std::string& name, const MatF& m) { acc += name + ":" + sha256_hex(m.span()) + ";"; });
    return sha256_hex(acc);
}

void save_encoder(const EncoderParams& params, const fs::path& path) {
    std::vector<NamedBuffer> buffers;
    params.weights.visit([&](const std::string& name, const MatF& m) {
        buffers.push_back({name, {m.rows, m.cols}, m.data});
    });
    json meta = {{"config", config_to_json(params.config)}, {"version", params.version}};
    write_checkpoint(path, kMagic, kFormatVersion, meta, buffers);
}

EncoderParams load_encoder(const fs::path& path) {
    auto ck = read_checkpoint(path, kMagic);
    if (ck.version != kFormatVersion) throw ParseError("unsupported encoder checkpoint version");
    EncoderParams p;
    p.config = config_from_json(ck.meta.at("config"));
    p.version = ck.meta.at("version").get<std::int64_t>();
    p.weights = EncoderWeights<float>(p.config);
    std::size_t i = 0;
    p.weights.visit([&](const std::string& name, MatF& m) {
        if (i >= ck.buffers.size() || ck.buffers[i].name != name || ck.buffers[i].values.size() != m.size()) {
            throw ParseError("encoder checkpoint layout mismatch at " + name);
        }
        m.data = std::move(ck.buffers[i].values);
        ++i;
    });
    return p;
}

}  // namespace sag
