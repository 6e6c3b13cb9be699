#pragma once

#include "sag/common/optim.hpp"
#include "sag/common/train_log.hpp"
#include "sag/slm/losses.hpp"

#include <cstdint>
#include <vector>

namespace sag::slm {

struct TrainConfig {
    double learning_rate = 1e-5;
    DecayShape decay = DecayShape::Cosine;
    double warmup_fraction = 0.01;
    std::size_t batch_size = 16;
    std::size_t epochs = 5;
    std::size_t max_seq_len = 2048;
    double beta = 0.1;       // DPO only
    double grad_clip = 1.0;  // global L2 norm; <= 0 disables
    std::uint64_t seed = 0;
};

/// Stage defaults: S-SFT at 1e-5 with cosine decay for 5 epochs and 1%
/// warm-up; C-DPO at 1e-6 for 1 epoch, otherwise identical.
TrainConfig sft_defaults();
TrainConfig dpo_defaults();

/// Masked cross-entropy training. Each step minimises the token-averaged
/// loss over its batch. Throws InvalidArgument on an empty dataset and
/// LengthOverflowError on examples longer than config.max_seq_len.
SLMParams sft_train(SLMParams params, const std::vector<SftExample>& dataset, const TrainConfig& config,
                    std::vector<StepLog>* log = nullptr);

/// Preference optimisation against a frozen reference. Each step minimises
/// the mean pair loss of its batch.
SLMParams dpo_train(SLMParams params, const SLMParams& reference, const std::vector<PreferencePair>& pairs,
                    const TrainConfig& config, std::vector<StepLog>* log = nullptr);

/// Mean of r(x, y_w) - r(x, y_l) over `pairs`.
double mean_reward_margin(const SLMParams& policy, const SLMParams& reference, const std::vector<PreferencePair>& pairs,
                          double beta);

}  // namespace sag::slm
