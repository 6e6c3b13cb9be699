#pragma once

#include "sag/common/tensor.hpp"
#include "sag/corpus/corpus.hpp"
#include "sag/style_embed/encoder.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace sag {

/// Similarities for one contrastive batch of n anchors with m hard negatives
/// each: `anchor_positive(i, k) = sim(a_i, p_k)`, `anchor_negative(i, k) =
/// sim(a_i, n_ik)`.
struct SimilarityTable {
    MatD anchor_positive;  // n x n
    MatD anchor_negative;  // n x m
};

/// In-batch negative loss. Each anchor's softmax runs over all n positives in
/// the batch plus its own m hard negatives; the target is its own positive.
/// Throws InvalidArgument for n = 0 or mismatched shapes.
double inbatch_loss(const SimilarityTable& sims);
/// Same value, also writing dLoss/dsim into `grad` (same shapes as `sims`).
double inbatch_loss(const SimilarityTable& sims, SimilarityTable& grad);

struct BatchText {
    std::string article_id;
    std::string user_id;
    std::string text;
};

struct StyleBatch {
    std::vector<BatchText> anchors;
    std::vector<BatchText> positives;
    std::vector<std::vector<BatchText>> hard_negatives;  // per anchor

    std::size_t n() const { return anchors.size(); }
    std::size_t m() const { return hard_negatives.empty() ? 0 : hard_negatives.front().size(); }
};

/// Draws n same-user (anchor, positive) pairs of distinct articles and m
/// cross-user negatives per anchor. Only articles with at least `min_words`
/// word units take part. Anchor users are spread over distinct users before
/// any user repeats. Deterministic in `seed`.
StyleBatch build_style_batch(const Corpus& corpus, std::size_t n, std::size_t m, std::uint64_t seed,
                             std::size_t min_words = 0);

struct LossAndGrad {
    double loss = 0.0;
    EncoderGrad grad;
};

/// Loss of the batch under `params` and its gradient by backpropagation
/// through the similarity table and the encoder.
LossAndGrad inbatch_loss_grad(const EncoderParams& params, const StyleBatch& batch);
double inbatch_loss_value(const EncoderParams& params, const StyleBatch& batch);

}  // namespace sag
