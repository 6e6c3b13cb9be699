#include "sag/slm/generate.hpp"
#include "sag/slm/losses.hpp"
#include "sag/slm/preferences.hpp"
#include "sag/slm/trainer.hpp"
#include "support/grad_check.hpp"
#include "support/naive_transformer.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace sag;
using namespace sag::slm;

namespace {

ModelConfig tiny_config(std::size_t vocab = 16) {
    ModelConfig c;
    c.vocab_size = vocab;
    c.d_model = 16;
    c.n_layers = 1;
    c.n_heads = 2;
    c.max_seq_len = 32;
    c.mlp_ratio = 2;
    return c;
}

ModelConfig byte_config() {
    ModelConfig c;
    c.vocab_size = kByteVocabSize;
    c.d_model = 32;
    c.n_layers = 1;
    c.n_heads = 2;
    c.max_seq_len = 96;
    c.mlp_ratio = 2;
    return c;
}

SLMParams random_model(const ModelConfig& c, std::uint64_t seed) {
    auto p = init_slm(c, seed);
    sag::testing::randomize(p, seed + 100);
    return p;
}

SftExample example(const std::string& s, const std::string& n, const std::string& r, const std::string& y) {
    return {encode_text(s), encode_text(n), encode_text(r), encode_text(y)};
}

std::vector<SftExample> toy_examples() {
    return {example("a1", "", "r", "cat sat"),  example("b2", "", "r", "dog ran"),
            example("c3", "", "r", "owl flew"), example("d4", "", "r", "fox hid"),
            example("e5", "", "r", "bee hums"), example("f6", "", "r", "ant dug"),
            example("g7", "", "r", "elk ate"),  example("h8", "", "r", "yak lay")};
}

constexpr std::size_t kOverfitEpochs = 150;

TrainConfig overfit_config(std::size_t epochs) {
    TrainConfig c;
    c.learning_rate = 1e-2;
    c.decay = DecayShape::Constant;
    c.warmup_fraction = 0.0;
    c.batch_size = 8;
    c.epochs = epochs;
    c.max_seq_len = 96;
    c.seed = 1;
    return c;
}

PreferencePair pair_of(const std::string& prompt, const std::string& chosen, const std::string& rejected) {
    return {encode_text(prompt), encode_text(chosen), encode_text(rejected)};
}

}  // namespace

TEST(Tokenizer, ByteRoundTrip) {
    const std::string s = "Zoë 😀 price: 12€";
    const auto t = encode_text(s);
    EXPECT_EQ(t.size(), s.size());
    EXPECT_EQ(decode_text(t), s);
    Tokens with_special = t;
    with_special.push_back(special::End);
    EXPECT_EQ(decode_text(with_special), s);
}

TEST(FormatPrompt, LayoutDeterministicAndRecoverable) {
    const auto s = encode_text("sum"), n = encode_text("neu"), r = encode_text("ref");
    const auto p = format_prompt(s, n, r, 64);
    EXPECT_EQ(p, format_prompt(s, n, r, 64));
    ASSERT_EQ(p.size(), 13u);
    EXPECT_EQ(p.front(), special::Summary);
    EXPECT_EQ(p.back(), special::Response);
    EXPECT_EQ(split_prompt(p), (PromptSections{s, n, r}));
}

TEST(FormatPrompt, EmptyNeutralKeepsSentinel) {
    const auto p = format_prompt(encode_text("s"), {}, encode_text("r"), 64);
    const Tokens expected{special::Summary, 's', special::Neutral, special::Reference, 'r', special::Response};
    EXPECT_EQ(p, expected);
    EXPECT_TRUE(split_prompt(p).neutral.empty());
}

TEST(FormatPrompt, Errors) {
    const Tokens bad{'a', special::End};
    EXPECT_THROW(format_prompt(bad, {}, {}, 64), SentinelCollisionError);
    EXPECT_THROW(format_prompt(encode_text("long text"), {}, {}, 8), LengthOverflowError);
}

TEST(FormatSftExample, TargetPositions) {
    const auto f = format_sft_example(example("s", "n", "r", "yy"), 64);
    EXPECT_EQ(f.target_start, 7u);
    EXPECT_EQ(f.tokens.size(), 10u);
    EXPECT_EQ(f.tokens.back(), special::End);
    EXPECT_THROW(format_sft_example(example("s", "n", "r", ""), 64), InvalidArgument);
    EXPECT_THROW(format_sft_example(example("s", "n", "r", "yyyy"), 10), LengthOverflowError);
}

TEST(Forward, MatchesNaiveImplementation) {
    const auto p = random_model(tiny_config(), 3);
    const std::vector<Token> tokens{1, 5, 2, 9, 0, 15, 3};
    const auto logits = forward(p, tokens);
    const auto naive = sag::testing::naive_logits(p, tokens);
    for (std::size_t t = 0; t < tokens.size(); ++t)
        for (std::size_t v = 0; v < 16; ++v) EXPECT_NEAR(logits(t, v), naive[t][v], 1e-9);
}

TEST(Forward, Errors) {
    const auto p = init_slm(tiny_config(), 0);
    EXPECT_THROW(forward(p, std::vector<Token>(33, 1)), LengthOverflowError);
    EXPECT_THROW(forward(p, std::vector<Token>{1, 16}), InvalidArgument);
}

TEST(IncrementalDecoder, MatchesFullForward) {
    const auto p = random_model(tiny_config(), 4);
    const std::vector<Token> tokens{3, 1, 4, 1, 5, 9, 2, 6};
    const auto full = forward(p, tokens);
    IncrementalDecoder dec(p);
    for (std::size_t t = 0; t < tokens.size(); ++t) {
        const auto& l = dec.step(tokens[t]);
        for (std::size_t v = 0; v < 16; ++v) EXPECT_NEAR(l[v], full(t, v), 1e-9);
    }
}

TEST(SftLoss, FreshModelIsUniform) {
    const auto p = init_slm(byte_config(), 7);
    EXPECT_NEAR(sft_loss(p, example("summary", "neutral", "ref", "a target text")), std::log(261.0), 0.05);
}

TEST(SftLoss, SingleTokenTargetIsNegLogProb) {
    const auto p = random_model(tiny_config(), 5);
    const FormattedExample f{{1, 2, 3, 4}, 3};
    const auto logits = sag::testing::naive_logits(p, f.tokens);
    EXPECT_NEAR(sft_loss(p, f), -sag::testing::log_prob(logits[2], 4), 1e-9);
}

TEST(SftLoss, MatchesStepThroughOracleAndMasksContext) {
    const auto p = random_model(tiny_config(), 6);
    const FormattedExample f{{7, 1, 8, 2, 8, 1, 8, 3, 15}, 5};
    const double expected = -sag::testing::naive_sequence_logprob(p, f.tokens, 5) / 4.0;
    EXPECT_NEAR(sft_loss(p, f), expected, 1e-9);
    // Changing a context token the loss does not score leaves the target
    // positions' labels alone; the loss depends on context only through
    // conditioning, which the oracle reproduces.
    FormattedExample g = f;
    g.tokens[2] = 11;
    EXPECT_NEAR(sft_loss(p, g), -sag::testing::naive_sequence_logprob(p, g.tokens, 5) / 4.0, 1e-9);
}

TEST(SftLoss, ContextLogitsGetNoGradient) {
    const auto p = random_model(tiny_config(), 8);
    const FormattedExample f{{1, 2, 3, 4, 5, 6}, 4};
    const auto lg = sft_loss_grad(p, f);
    // Only the predictions made from positions 3 and 4 are scored, so the
    // position embeddings of rows 5+ never matter.
    for (std::size_t t = 5; t < 32; ++t)
        for (std::size_t j = 0; j < 16; ++j) EXPECT_EQ(lg.grad.position_embedding(t, j), 0.0);
}

TEST(SftLossGrad, FiniteDifferences) {
    auto p = random_model(tiny_config(), 9);
    const FormattedExample f{{1, 2, 3, 4, 5, 6, 7}, 3};
    const auto lg = sft_loss_grad(p, f);
    EXPECT_NEAR(lg.loss, sft_loss(p, f), 1e-12);
    for (const auto& e : sag::testing::gradient_check(p.weights, lg.grad, [&] { return sft_loss(p, f); }))
        EXPECT_LT(e.relative_error, 1e-3) << e.name;
}

TEST(SequenceLogprob, AdditiveAndNormalised) {
    const auto p = random_model(tiny_config(), 10);
    const Tokens ctx{2, 7}, y{4, 1, 9, 3};
    double sum = 0.0;
    Tokens prefix = ctx;
    for (Token t : y) {
        const Tokens one{t};
        sum += sequence_logprob(p, prefix, one);
        prefix.push_back(t);
    }
    EXPECT_NEAR(sequence_logprob(p, ctx, y), sum, 1e-9);
    EXPECT_NEAR(sequence_logprob(p, ctx, y), sag::testing::naive_sequence_logprob(p, {2, 7, 4, 1, 9, 3}, 2), 1e-9);
    for (const Tokens& c : {Tokens{5}, Tokens{2, 7}, Tokens{1, 2, 3, 4}}) {
        double total = 0.0;
        for (Token v = 0; v < 16; ++v) total += std::exp(sequence_logprob(p, c, Tokens{v}));
        EXPECT_NEAR(total, 1.0, 1e-5);
    }
}

TEST(ImplicitReward, IdentityAndLinearity) {
    const auto p = random_model(tiny_config(), 11);
    const auto q = random_model(tiny_config(), 12);
    const Tokens x{1, 2}, y{3, 4, 5};
    EXPECT_EQ(implicit_reward(p, p, x, y, 0.1), 0.0);
    EXPECT_NEAR(implicit_reward(p, q, x, y, 0.2), 2 * implicit_reward(p, q, x, y, 0.1), 1e-12);
    const double brute = 0.1 * (sag::testing::naive_sequence_logprob(p, {1, 2, 3, 4, 5}, 2) -
                                sag::testing::naive_sequence_logprob(q, {1, 2, 3, 4, 5}, 2));
    EXPECT_NEAR(implicit_reward(p, q, x, y, 0.1), brute, 1e-9);
    EXPECT_THROW(implicit_reward(p, random_model(tiny_config(17), 1), x, y, 0.1), TokenizerMismatchError);
}

TEST(DpoLoss, EqualsLn2AtReference) {
    const auto p = random_model(tiny_config(), 13);
    for (double beta : {0.01, 0.1, 1.0, 5.0}) {
        EXPECT_NEAR(dpo_loss(p, p, {{1, 2}, {3, 4}, {5}}, beta), std::numbers::ln2, 1e-6);
        EXPECT_NEAR(dpo_loss(p, p, {{9}, {3}, {5, 6, 7}}, beta), std::numbers::ln2, 1e-6);
    }
}

TEST(DpoLoss, SoftplusLimits) {
    EXPECT_NEAR(softplus(0.0), std::numbers::ln2, 1e-15);
    EXPECT_DOUBLE_EQ(softplus(-800.0), 0.0);
    EXPECT_DOUBLE_EQ(softplus(800.0), 800.0);
    double prev = softplus(0.0);
    for (double margin = 1; margin <= 64; margin *= 2) {
        const double l = softplus(-margin);
        EXPECT_LT(l, prev);
        prev = l;
    }
    EXPECT_LT(prev, 1e-20);
}

TEST(DpoLossGrad, FiniteDifferences) {
    auto policy = random_model(tiny_config(), 14);
    const auto reference = random_model(tiny_config(), 15);
    const PreferencePair pair{{1, 2, 3}, {4, 5, 6}, {7, 8}};
    const double beta = 0.5;
    const auto ref = reference_logps(reference, pair);
    const auto lg = dpo_loss_grad(policy, ref, pair, beta);
    EXPECT_NEAR(lg.loss, dpo_loss(policy, reference, pair, beta), 1e-9);
    EXPECT_GT(lg.loss, 0.0);
    for (const auto& e : sag::testing::gradient_check(policy.weights, lg.grad,
                                                      [&] { return dpo_loss(policy, reference, pair, beta); }))
        EXPECT_LT(e.relative_error, 1e-3) << e.name;
}

TEST(SftTrain, ZeroEpochsAndEmptyDataset) {
    const auto init = init_slm(byte_config(), 1);
    EXPECT_EQ(sft_train(init, toy_examples(), overfit_config(0)), init);
    EXPECT_THROW(sft_train(init, {}, overfit_config(1)), InvalidArgument);
}

TEST(SftTrain, OverfitsAndIsReproducible) {
    const auto init = init_slm(byte_config(), 1);
    std::vector<StepLog> log_a, log_b;
    const auto a = sft_train(init, toy_examples(), overfit_config(kOverfitEpochs), &log_a);
    const auto b = sft_train(init, toy_examples(), overfit_config(kOverfitEpochs), &log_b);
    EXPECT_EQ(slm_hash(a), slm_hash(b));
    ASSERT_EQ(log_a.size(), kOverfitEpochs);
    EXPECT_EQ(log_a.back().loss, log_b.back().loss);
    double mean = 0.0;
    for (const auto& ex : toy_examples()) mean += sft_loss(a, ex);
    mean /= 8.0;
    EXPECT_LT(mean, 0.05);

    DecodingOptions greedy;
    greedy.max_new_tokens = 40;
    for (const auto& ex : toy_examples()) {
        const auto prompt = format_prompt(ex.summary, ex.neutral, ex.reference, 96);
        EXPECT_EQ(generate(a, prompt, greedy), ex.target);
    }
}

TEST(Generate, CapsDeterminismAndOverflow) {
    const auto p = random_model(byte_config(), 2);
    const auto prompt = format_prompt(encode_text("s"), {}, encode_text("r"), 96);
    DecodingOptions opt;
    opt.max_new_tokens = 0;
    EXPECT_TRUE(generate(p, prompt, opt).empty());
    opt.max_new_tokens = 20;
    EXPECT_EQ(generate(p, prompt, opt), generate(p, prompt, opt));
    opt.greedy = false;
    opt.temperature = 0.8;
    opt.top_k = 20;
    opt.seed = 5;
    const auto s1 = generate(p, prompt, opt);
    EXPECT_EQ(s1, generate(p, prompt, opt));
    for (Token t : s1) EXPECT_FALSE(is_special(t));
    EXPECT_LE(s1.size(), 20u);
    EXPECT_THROW(generate(p, Tokens(97, 'a'), opt), LengthOverflowError);
    // The context fills up before the token cap.
    opt.max_new_tokens = 500;
    EXPECT_LE(generate(p, Tokens(90, 'a'), opt).size(), 6u);
}

TEST(DpoTrain, RaisesMarginAndFreezesReference) {
    auto reference = sft_train(init_slm(byte_config(), 3), toy_examples(), overfit_config(20));
    std::vector<PreferencePair> pairs;
    const char* clean[] = {"price 12 in Oslo", "paid 40 at Nara", "cost 7 in Lima", "spent 3 at Rome"};
    const char* dirty[] = {"price 99 in Oslo", "paid 11 at Nara", "cost 85 in Lima", "spent 61 at Rome"};
    for (std::size_t i = 0; i < 32; ++i) {
        const auto prompt = format_prompt(encode_text("s" + std::to_string(i)), {}, encode_text("r"), 96);
        pairs.push_back({prompt, encode_text(clean[i % 4]), encode_text(dirty[i % 4])});
    }
    const auto ref_hash = slm_hash(reference);
    TrainConfig cfg = dpo_defaults();
    cfg.learning_rate = 1e-3;
    cfg.batch_size = 8;
    cfg.epochs = 2;
    cfg.max_seq_len = 96;
    cfg.seed = 4;

    EXPECT_EQ(dpo_train(reference, reference, pairs, [&] {
                  auto c = cfg;
                  c.epochs = 0;
                  return c;
              }()),
              reference);
    std::vector<StepLog> log;
    const auto before = mean_reward_margin(reference, reference, pairs, cfg.beta);
    const auto policy = dpo_train(reference, reference, pairs, cfg, &log);
    EXPECT_EQ(before, 0.0);
    ASSERT_FALSE(log.empty());
    EXPECT_NEAR(log.front().loss, std::numbers::ln2, 1e-6);
    EXPECT_GT(mean_reward_margin(policy, reference, pairs, cfg.beta), 0.0);
    EXPECT_EQ(slm_hash(reference), ref_hash);
    EXPECT_EQ(slm_hash(dpo_train(reference, reference, pairs, cfg)), slm_hash(policy));
    EXPECT_THROW(dpo_train(reference, reference, {}, cfg), InvalidArgument);
}

TEST(SlmCheckpoint, SaveLoadBitExact) {
    const auto p = random_model(tiny_config(), 20);
    const auto path = fs::temp_directory_path() / "sag_slm_roundtrip.bin";
    save_slm(p, path);
    EXPECT_EQ(load_slm(path), p);
}

TEST(Records, JsonRoundTrip) {
    const SftRecord r{"u1", "a1", "a2", "Sum 3", "neutral", "ref 😀", "target"};
    EXPECT_EQ(sft_record_from_json(sft_record_to_json(r)), r);
    const PreferenceRecord p{"u1", "a2", "S", "N", "R", "good", "bad", 1};
    EXPECT_EQ(preference_record_from_json(preference_record_to_json(p)), p);
    auto same = preference_record_to_json(p);
    same["rejected"] = "good";
    EXPECT_THROW(preference_record_from_json(same), ParseError);
    const auto pair = to_pair(p, 64);
    EXPECT_EQ(pair.chosen, encode_text("good"));
    EXPECT_EQ(split_prompt(pair.prompt).reference, encode_text("R"));
}

TEST(SanitizeGenerated, ReplacesInvalidUtf8) {
    EXPECT_EQ(sanitize_generated("ok"), "ok");
    EXPECT_EQ(sanitize_generated(std::string("a\xff" "b")), "a\xEF\xBF\xBD" "b");
    // One replacement per offending byte, including a truncated sequence.
    EXPECT_EQ(sanitize_generated(std::string("\xF0\x9F")), "\xEF\xBF\xBD\xEF\xBF\xBD");
}

namespace {

std::vector<SftRecord> heldout_records(std::size_t n) {
    std::vector<SftRecord> out;
    for (std::size_t i = 0; i < n; ++i) {
        const auto id = std::to_string(i);
        out.push_back({"u" + id, "r" + id, "t" + id, "Oslo " + id, "neutral " + id, "ref " + id, "target " + id});
    }
    return out;
}

llm::Gateway mock_gateway(llm::FunctionMockClient::Fn fn) {
    return llm::Gateway(std::make_shared<llm::FunctionMockClient>(std::move(fn)), llm::PromptLibrary::load_default());
}

}  // namespace

TEST(BuildPreferenceDataset, UnchangedCorrectionsAreDropped) {
    const auto p = random_model(byte_config(), 21);
    const auto g = mock_gateway([](auto&, const json& v) { return v.at("generated").get<std::string>(); });
    DecodingOptions opt;
    opt.max_new_tokens = 12;
    std::size_t emitted = 0;
    const auto stats = build_preference_dataset(p, heldout_records(5), g, opt, 96, [&](auto&) { ++emitted; });
    EXPECT_EQ(emitted, 0u);
    EXPECT_EQ(stats.pairs, 0u);
    EXPECT_EQ(stats.examples, 5u);
    EXPECT_EQ(stats.dropped_unchanged + stats.dropped_invalid, 5u);
}

TEST(BuildPreferenceDataset, SubstitutionGivesOnePairPerExample) {
    const auto p = random_model(byte_config(), 22);
    const auto g = mock_gateway([](auto&, const json& v) { return "fixed " + v.at("generated").get<std::string>(); });
    DecodingOptions opt;
    opt.max_new_tokens = 12;
    std::vector<PreferenceRecord> out;
    const auto heldout = heldout_records(20);
    const auto stats = build_preference_dataset(p, heldout, g, opt, 96, [&](const auto& r) { out.push_back(r); });
    EXPECT_EQ(stats.pairs + stats.dropped_invalid, 20u);
    EXPECT_EQ(out.size(), stats.pairs);
    EXPECT_GE(out.size(), 15u);
    std::size_t prev = 0;
    for (const auto& r : out) {
        EXPECT_NE(r.chosen, r.rejected);
        EXPECT_FALSE(r.chosen.empty());
        EXPECT_FALSE(r.rejected.empty());
        EXPECT_EQ(r.chosen, "fixed " + r.rejected);
        const auto pair = to_pair(r, 96);
        EXPECT_LE(pair.prompt.size() + std::max(pair.chosen.size(), pair.rejected.size()), 96u);
        // Emitted in input order.
        const std::size_t idx = std::stoul(r.target_id.substr(1));
        EXPECT_GE(idx, prev);
        prev = idx;
        EXPECT_EQ(r.summary, heldout[idx].summary);
    }
}

TEST(BuildPreferenceDataset, GatewayFailuresAreRecorded) {
    const auto p = random_model(byte_config(), 23);
    const auto g = mock_gateway([](auto&, const json& v) -> std::string {
        if (v.at("summary") == "Oslo 2") throw llm::ServiceError("quota", 429, false);
        return "fixed " + v.at("generated").get<std::string>();
    });
    DecodingOptions opt;
    opt.max_new_tokens = 8;
    const auto stats = build_preference_dataset(p, heldout_records(4), g, opt, 96, [](auto&) {});
    ASSERT_EQ(stats.failures.size(), 1u);
    EXPECT_EQ(stats.failures[0].rfind("t2:", 0), 0u) << stats.failures[0];
}
