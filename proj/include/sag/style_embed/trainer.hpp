#pragma once

#include "sag/common/train_log.hpp"
#include "sag/corpus/corpus.hpp"
#include "sag/style_embed/encoder.hpp"

#include <cstdint>
#include <vector>

namespace sag {

struct FilterTrainConfig {
    EncoderConfig encoder;
    std::size_t epochs = 3;
    std::size_t batch_size = 16;
    double learning_rate = 2e-5;
    double warmup_fraction = 0.05;  // linear warm-up, then constant
    std::size_t hard_negatives = 1;
    std::size_t min_words = 0;
    double grad_clip = 1.0;  // global L2 norm; <= 0 disables
    std::uint64_t seed = 0;
};

/// Trains a freshly initialised encoder (seeded by `config.seed`).
EncoderParams train_filter_model(const Corpus& corpus, const FilterTrainConfig& config,
                                 std::vector<StepLog>* log = nullptr);

/// Continues training from `init`. With zero epochs `init` is returned as is.
EncoderParams train_filter_model(const Corpus& corpus, EncoderParams init, const FilterTrainConfig& config,
                                 std::vector<StepLog>* log = nullptr);

struct StyleSeparation {
    double mean_same_user = 0.0;
    double mean_cross_user = 0.0;
    std::size_t same_pairs = 0;
    std::size_t cross_pairs = 0;
    double separation() const { return mean_same_user - mean_cross_user; }
};

/// Mean cosine over all same-user article pairs versus all cross-user pairs.
StyleSeparation style_separation(const EncoderParams& params, const Corpus& corpus);

}  // namespace sag
