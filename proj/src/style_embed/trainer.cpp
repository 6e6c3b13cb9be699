#include "sag/style_embed/trainer.hpp"

#include "sag/common/error.hpp"
#include "sag/common/optim.hpp"
#include "sag/common/random.hpp"
#include "sag/style_embed/contrastive.hpp"

#include <algorithm>
#include <cmath>

namespace sag {
namespace {

std::size_t eligible_users(const Corpus& corpus, std::size_t min_words, std::size_t* eligible_articles) {
    std::size_t users = 0;
    *eligible_articles = 0;
    for (const auto& u : corpus.users()) {
        const auto k = static_cast<std::size_t>(std::count_if(
            u.articles.begin(), u.articles.end(), [&](const Article& a) { return a.word_count >= min_words; }));
        if (k >= 2) {
            ++users;
            *eligible_articles += k;
        }
    }
    return users;
}

}  // namespace

EncoderParams train_filter_model(const Corpus& corpus, const FilterTrainConfig& config, std::vector<StepLog>* log) {
    return train_filter_model(corpus, init_encoder(config.encoder, config.seed), config, log);
}

EncoderParams train_filter_model(const Corpus& corpus, EncoderParams params, const FilterTrainConfig& config,
                                 std::vector<StepLog>* log) {
    if (config.epochs == 0) return params;
    if (config.batch_size == 0) throw InvalidArgument("batch size must be positive");
    std::size_t eligible_articles = 0;
    const std::size_t users = eligible_users(corpus, config.min_words, &eligible_articles);
    if (users == 0 || corpus.users().size() < 2) {
        throw InsufficientDataError("filter training needs two users and one user with two eligible articles");
    }

    // A batch never repeats a user while unseen ones remain, so a batch larger
    // than the user count would pit an anchor against its own user's positives.
    const std::size_t n = std::min(config.batch_size, users);
    const std::size_t steps_per_epoch = (eligible_articles + n - 1) / n;
    const std::size_t total_steps = steps_per_epoch * config.epochs;

    Adam adam;
    for (std::size_t step = 0; step < total_steps; ++step) {
        const auto batch = build_style_batch(corpus, n, config.hard_negatives, mix_seed(config.seed, step + 1),
                                             config.min_words);
        auto lg = inbatch_loss_grad(params, batch);

        std::vector<std::span<float>> ps;
        std::vector<std::span<double>> gs;
        params.weights.visit([&](const std::string&, MatF& m) { ps.push_back(m.span()); });
        lg.grad.visit([&](const std::string&, MatD& m) { gs.push_back(m.span()); });
        clip_global_norm(gs, config.grad_clip);
        std::vector<std::span<const double>> cgs(gs.begin(), gs.end());

        const double lr = scheduled_lr(config.learning_rate, DecayShape::Constant, config.warmup_fraction, step,
                                       total_steps);
        adam.step(ps, cgs, lr);
        if (log) log->push_back({step, lg.loss, lr, 0.0});
    }
    params.version += 1;
    return params;
}

StyleSeparation style_separation(const EncoderParams& params, const Corpus& corpus) {
    std::vector<StyleVector> vecs;
    std::vector<std::size_t> owner;
    for (std::size_t u = 0; u < corpus.users().size(); ++u) {
        for (const auto& a : corpus.users()[u].articles) {
            vecs.push_back(encode(params, a.body));
            owner.push_back(u);
        }
    }
    StyleSeparation s;
    double same = 0.0, cross = 0.0;
    for (std::size_t i = 0; i < vecs.size(); ++i) {
        for (std::size_t j = i + 1; j < vecs.size(); ++j) {
            const double c = cosine_sim(vecs[i], vecs[j]);
            if (owner[i] == owner[j]) {
                same += c;
                ++s.same_pairs;
            } else {
                cross += c;
                ++s.cross_pairs;
            }
        }
    }
    if (s.same_pairs) s.mean_same_user = same / static_cast<double>(s.same_pairs);
    if (s.cross_pairs) s.mean_cross_user = cross / static_cast<double>(s.cross_pairs);
    return s;
}

}  // namespace sag
