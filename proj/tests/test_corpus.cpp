#include "sag/corpus/corpus.hpp"
#include "sag/synthetic/synthetic.hpp"
#include "sag/text/unicode.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

using namespace sag;

namespace {

fs::path write_temp(const std::string& name, const std::string& content) {
    const fs::path p = fs::temp_directory_path() / ("sag_corpus_" + name);
    write_file_atomic(p, content);
    return p;
}

std::string line(const std::string& id, const std::string& user, const std::string& body, std::int64_t ts) {
    return dump_json({{"id", id}, {"user_id", user}, {"body", body}, {"published_at", ts}}) + "\n";
}

}  // namespace

TEST(WordCount, MixedScriptFixture) {
    // Hand count: Hello | 世 | 界 | I | paid | 42 | 元 | for | café | très | bien
    EXPECT_EQ(text::word_count("Hello, 世界! I paid 42元 for café—très bien 😀"), 11u);
}

TEST(WordCount, EdgeCases) {
    EXPECT_EQ(text::word_count(""), 0u);
    EXPECT_EQ(text::word_count("!!! 😀😀 ..."), 0u);
    EXPECT_EQ(text::word_count("don't"), 2u);
    EXPECT_EQ(text::word_count("日本語"), 3u);
    EXPECT_EQ(text::word_count("  spaced   out  "), 2u);
}

TEST(TokenizeForMetrics, Basics) {
    EXPECT_EQ(text::tokenize_for_metrics("The cat!"), (std::vector<std::string>{"the", "cat"}));
    EXPECT_TRUE(text::tokenize_for_metrics("").empty());
}

TEST(TokenizeForMetrics, MixedScriptHandTokenized) {
    // Skin-tone modifier and ZWJ are dropped; each emoji codepoint stays.
    const auto toks = text::tokenize_for_metrics("Hi 👋🏽 你好, Zoë! 👨‍👩‍👧 ÉTÉ");
    const std::vector<std::string> expected{"hi", "👋", "你", "好", "zoë", "👨", "👩", "👧", "été"};
    EXPECT_EQ(toks, expected);
}

TEST(Unicode, InvalidBytesBecomeReplacementCharacter) {
    const auto cps = text::decode_utf8("a\xff" "b");
    ASSERT_EQ(cps.size(), 3u);
    EXPECT_EQ(cps[1], U'�');
}

TEST(Unicode, StripEmoji) {
    EXPECT_FALSE(text::contains_emoji(text::strip_emoji("yum 😋🔥 ok ✨")));
    EXPECT_TRUE(text::contains_emoji("☕"));
    EXPECT_EQ(text::strip_emoji("plain"), "plain");
}

TEST(Ingest, GroupsAndSortsByTimestampThenId) {
    const auto p = write_temp("sort.jsonl", line("b2", "bob", "two", 20) + line("a1", "amy", "one", 5) +
                                                line("b1", "bob", "one", 20) + line("b0", "bob", "zero", 10));
    const Corpus c = ingest_corpus(p);
    ASSERT_EQ(c.users().size(), 2u);
    EXPECT_EQ(c.users()[0].user_id, "amy");
    const auto& bob = c.users()[1].articles;
    ASSERT_EQ(bob.size(), 3u);
    EXPECT_EQ(bob[0].id, "b0");
    EXPECT_EQ(bob[1].id, "b1");
    EXPECT_EQ(bob[2].id, "b2");
    EXPECT_EQ(corpus_stats(c), (CorpusStats{2, 4, 4}));
}

TEST(Ingest, WordCountDerivedFromBody) {
    const auto p = write_temp("wc.jsonl", line("x", "u", "Hello, 世界", 1));
    EXPECT_EQ(ingest_corpus(p).users()[0].articles[0].word_count, 3u);
}

TEST(Ingest, ParseErrorReportsLine) {
    const auto p = write_temp("bad.jsonl", line("a", "u", "ok", 1) + "{\"id\": \"b\", \"user_id\": \"u\"\n");
    try {
        ingest_corpus(p);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
}

TEST(Ingest, MissingFieldReportsLine) {
    const auto p = write_temp("missing.jsonl", line("a", "u", "ok", 1) + "{\"id\": \"b\", \"body\": \"x\", \"published_at\": 3}\n");
    try {
        ingest_corpus(p);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
}

TEST(Ingest, DuplicateIdRejected) {
    const auto p = write_temp("dup.jsonl", line("a", "u", "one", 1) + line("a", "v", "two", 2));
    try {
        ingest_corpus(p);
        FAIL();
    } catch (const DuplicateIdError& e) {
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }
}

TEST(Ingest, EmptyBodyRejected) {
    const auto p = write_temp("empty.jsonl", line("a", "u", "", 1));
    EXPECT_THROW(ingest_corpus(p), Error);
}

TEST(Ingest, OptionalTitleAndUnknownFields) {
    const auto p = write_temp("title.jsonl", dump_json({{"id", "a"}, {"user_id", "u"}, {"title", "T"}, {"body", "x"},
                                                        {"published_at", 1}, {"extra", 3}}) +
                                                 "\n");
    const Corpus c = ingest_corpus(p);
    EXPECT_EQ(c.users()[0].articles[0].title, std::optional<std::string>("T"));
}

TEST(Ingest, RoundTripThroughWriteCorpus) {
    const Corpus original = synthetic::make_style_corpus({5, 4, 3});
    const auto p = fs::temp_directory_path() / "sag_corpus_roundtrip.jsonl";
    write_corpus(original, p);
    EXPECT_EQ(ingest_corpus(p), original);
}

TEST(Ingest, LineOrderDoesNotMatter) {
    auto articles = synthetic::make_style_articles({6, 5, 11});
    std::vector<std::string> lines;
    for (const auto& a : articles) lines.push_back(dump_json(article_to_json(a)) + "\n");
    std::string forward, shuffled;
    for (const auto& l : lines) forward += l;
    std::mt19937 gen(3);
    std::shuffle(lines.begin(), lines.end(), gen);
    for (const auto& l : lines) shuffled += l;
    EXPECT_EQ(ingest_corpus(write_temp("fwd.jsonl", forward)), ingest_corpus(write_temp("shuf.jsonl", shuffled)));
}

TEST(CorpusStats, CountsAreConsistent) {
    const Corpus c = synthetic::make_style_corpus({7, 3, 1});
    const auto s = corpus_stats(c);
    EXPECT_EQ(s.num_users, 7u);
    EXPECT_EQ(s.num_articles, 21u);
    std::size_t words = 0;
    for (const auto& u : c.users())
        for (const auto& a : u.articles) words += text::word_count(a.body);
    EXPECT_EQ(s.words_total, words);
}
