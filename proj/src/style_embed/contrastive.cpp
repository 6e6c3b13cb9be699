#include "sag/style_embed/contrastive.hpp"

#include "sag/common/error.hpp"
#include "sag/common/random.hpp"

#include <cmath>
#include <limits>

namespace sag {
namespace {

void check_shapes(const SimilarityTable& s) {
    const std::size_t n = s.anchor_positive.rows;
    if (n == 0) throw InvalidArgument("inbatch_loss: batch has no anchor-positive pairs");
    if (s.anchor_positive.cols != n) throw InvalidArgument("inbatch_loss: anchor-positive table must be n x n");
    if (s.anchor_negative.cols > 0 && s.anchor_negative.rows != n) {
        throw InvalidArgument("inbatch_loss: anchor-negative table must have n rows");
    }
}

double loss_impl(const SimilarityTable& s, SimilarityTable* grad) {
    check_shapes(s);
    const std::size_t n = s.anchor_positive.rows;
    const std::size_t m = s.anchor_negative.cols;
    if (grad) {
        grad->anchor_positive = MatD(n, n);
        grad->anchor_negative = MatD(s.anchor_negative.rows, m);
    }
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < n; ++k) mx = std::max(mx, s.anchor_positive(i, k));
        for (std::size_t k = 0; k < m; ++k) mx = std::max(mx, s.anchor_negative(i, k));
        double denom = 0.0;
        for (std::size_t k = 0; k < n; ++k) denom += std::exp(s.anchor_positive(i, k) - mx);
        for (std::size_t k = 0; k < m; ++k) denom += std::exp(s.anchor_negative(i, k) - mx);
        const double log_denom = mx + std::log(denom);
        total += log_denom - s.anchor_positive(i, i);
        if (grad) {
            const double scale = 1.0 / static_cast<double>(n);
            for (std::size_t k = 0; k < n; ++k) {
                grad->anchor_positive(i, k) = scale * std::exp(s.anchor_positive(i, k) - log_denom);
            }
            grad->anchor_positive(i, i) -= scale;
            for (std::size_t k = 0; k < m; ++k) {
                grad->anchor_negative(i, k) = scale * std::exp(s.anchor_negative(i, k) - log_denom);
            }
        }
    }
    return std::max(0.0, total / static_cast<double>(n));
}

struct EligibleUser {
    const UserCollection* user;
    std::vector<const Article*> articles;
};

BatchText to_batch_text(const Article& a) { return {a.id, a.user_id, a.body}; }

double dot(const StyleVector& a, const StyleVector& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.values.size(); ++k) s += a.values[k] * b.values[k];
    return s;
}

struct BatchForward {
    std::vector<EncodeTrace> anchors, positives;
    std::vector<std::vector<EncodeTrace>> negatives;
    SimilarityTable sims;
};

BatchForward forward_batch(const EncoderParams& params, const StyleBatch& batch) {
    const std::size_t n = batch.n();
    const std::size_t m = batch.m();
    if (n == 0) throw InvalidArgument("inbatch_loss: batch has no anchor-positive pairs");
    BatchForward f;
    for (std::size_t i = 0; i < n; ++i) {
        f.anchors.push_back(encode_traced(params, batch.anchors[i].text));
        f.positives.push_back(encode_traced(params, batch.positives[i].text));
        std::vector<EncodeTrace> negs;
        for (const auto& neg : batch.hard_negatives[i]) negs.push_back(encode_traced(params, neg.text));
        if (negs.size() != m) throw InvalidArgument("style batch anchors have differing negative counts");
        f.negatives.push_back(std::move(negs));
    }
    // Raw dot products rather than cosine_sim: clamping would zero the
    // gradient at the boundary and the vectors are already unit length.
    f.sims.anchor_positive = MatD(n, n);
    f.sims.anchor_negative = MatD(n, m);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < n; ++k) f.sims.anchor_positive(i, k) = dot(f.anchors[i].output, f.positives[k].output);
        for (std::size_t k = 0; k < m; ++k) f.sims.anchor_negative(i, k) = dot(f.anchors[i].output, f.negatives[i][k].output);
    }
    return f;
}

}  // namespace

double inbatch_loss(const SimilarityTable& sims) { return loss_impl(sims, nullptr); }

double inbatch_loss(const SimilarityTable& sims, SimilarityTable& grad) { return loss_impl(sims, &grad); }

StyleBatch build_style_batch(const Corpus& corpus, std::size_t n, std::size_t m, std::uint64_t seed,
                             std::size_t min_words) {
    if (n == 0) throw InvalidArgument("style batch needs at least one anchor");
    if (corpus.users().size() < 2) throw InsufficientDataError("style batch needs at least two users");

    std::vector<EligibleUser> eligible;
    for (const auto& u : corpus.users()) {
        EligibleUser e{&u, {}};
        for (const auto& a : u.articles)
            if (a.word_count >= min_words) e.articles.push_back(&a);
        if (e.articles.size() >= 2) eligible.push_back(std::move(e));
    }
    if (eligible.empty()) {
        throw InsufficientDataError("no user has two articles with at least " + std::to_string(min_words) + " words");
    }

    Rng rng(seed);
    std::vector<std::size_t> order(eligible.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(std::span(order));

    StyleBatch batch;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& e = eligible[order[i % order.size()]];
        const std::size_t k = e.articles.size();
        const std::size_t ia = rng.index(k);
        std::size_t ip = rng.index(k - 1);
        if (ip >= ia) ++ip;
        batch.anchors.push_back(to_batch_text(*e.articles[ia]));
        batch.positives.push_back(to_batch_text(*e.articles[ip]));

        std::vector<BatchText> negatives;
        if (m > 0) {
            std::vector<const Article*> pool;
            for (const auto& u : corpus.users()) {
                if (u.user_id == e.user->user_id) continue;
                for (const auto& a : u.articles)
                    if (a.word_count >= min_words) pool.push_back(&a);
            }
            if (pool.empty()) throw InsufficientDataError("no cross-user articles available for hard negatives");
            for (std::size_t j = 0; j < m; ++j) negatives.push_back(to_batch_text(*pool[rng.index(pool.size())]));
        }
        batch.hard_negatives.push_back(std::move(negatives));
    }
    return batch;
}

double inbatch_loss_value(const EncoderParams& params, const StyleBatch& batch) {
    return inbatch_loss(forward_batch(params, batch).sims);
}

LossAndGrad inbatch_loss_grad(const EncoderParams& params, const StyleBatch& batch) {
    auto f = forward_batch(params, batch);
    SimilarityTable dsims;
    LossAndGrad out;
    out.loss = inbatch_loss(f.sims, dsims);
    out.grad = EncoderGrad(params.config);

    const std::size_t n = batch.n(), m = batch.m(), d = params.config.dim;
    std::vector<std::vector<double>> d_anchor(n, std::vector<double>(d, 0.0));
    std::vector<std::vector<double>> d_positive(n, std::vector<double>(d, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        const auto& a = f.anchors[i].output.values;
        for (std::size_t k = 0; k < n; ++k) {
            const double g = dsims.anchor_positive(i, k);
            const auto& p = f.positives[k].output.values;
            for (std::size_t c = 0; c < d; ++c) {
                d_anchor[i][c] += g * p[c];
                d_positive[k][c] += g * a[c];
            }
        }
        for (std::size_t k = 0; k < m; ++k) {
            const double g = dsims.anchor_negative(i, k);
            const auto& nv = f.negatives[i][k].output.values;
            std::vector<double> d_neg(d);
            for (std::size_t c = 0; c < d; ++c) {
                d_anchor[i][c] += g * nv[c];
                d_neg[c] = g * a[c];
            }
            encode_backward(params, f.negatives[i][k], d_neg, out.grad);
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        encode_backward(params, f.anchors[i], d_anchor[i], out.grad);
        encode_backward(params, f.positives[i], d_positive[i], out.grad);
    }
    return out;
}

}  // namespace sag
