#include "sag/synthetic/synthetic.hpp"

#include "sag/common/random.hpp"
#include "sag/llm_gateway/chat_client.hpp"

#include <array>
#include <cctype>
#include <cstdio>

namespace sag::synthetic {
namespace {

constexpr std::array kCities = {"Paris", "Kyoto", "Lima", "Oslo", "Cairo", "Dublin", "Seoul", "Quito"};
constexpr std::array kShops = {"Bakery", "Market", "Cafe", "Diner", "Bistro", "Deli"};
constexpr std::array kProducts = {"bread", "tea", "noodles", "cake", "soup", "rice", "pie", "juice"};
constexpr std::array kFiller = {"the", "was", "and", "got", "at", "for"};
constexpr std::array kStyleWords = {
    "omg",   "lol",    "yummy", "honestly", "vibes",  "lowkey", "sooo",  "btw",   "fr",     "bestie",
    "tbh",   "legit",  "epic",  "cozy",     "dreamy", "wild",   "fancy", "chill", "superb", "meh",
    "yay",   "woah",   "neat",  "lovely",   "tasty",  "zesty",  "rad",   "comfy", "slay",   "iconic",
    "cute",  "crispy", "fresh", "divine",   "bomb",   "vibey",  "yass",  "nah",   "hmm",    "wow"};
constexpr std::array kEmoji = {"\U0001F600", "\U0001F60B", "\U0001F525", "✨", "\U0001F496",
                               "\U0001F389", "\U0001F35C", "☕",     "\U0001F970", "\U0001F44D"};
constexpr std::array kPunct = {"!!", "~", "...", "!?", "!"};

// Disjoint vocabularies for the two-style corpus.
constexpr std::array kStyleA = {"alpha",   "amber",  "anchor", "apex",   "arbor",  "atlas",  "azure",
                                "aurora",  "acorn",  "agate",  "alder",  "aspen",  "astral", "avid",
                                "axiom",   "adorn",  "ample",  "ardent", "aria",   "ascent"};
constexpr std::array kStyleB = {"bramble", "brisk",  "bronze", "bayou",  "beacon", "birch",  "bison",
                                "bloom",   "bolt",   "brook",  "bugle",  "burrow", "byte",   "basalt",
                                "banjo",   "bask",   "blaze",  "bluff",  "brine",  "buoy"};

template <class A>
const char* pick(Rng& rng, const A& items) {
    return items[rng.index(items.size())];
}

struct UserStyle {
    std::vector<std::string> words;
    std::string emoji;
    std::string punct;
};

UserStyle make_user_style(Rng& rng) {
    UserStyle s;
    std::vector<std::size_t> idx(kStyleWords.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    rng.shuffle(std::span<std::size_t>(idx));
    for (std::size_t i = 0; i < 4; ++i) s.words.emplace_back(kStyleWords[idx[i]]);
    s.emoji = pick(rng, kEmoji);
    s.punct = pick(rng, kPunct);
    return s;
}

std::string user_id(std::size_t u) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "u%03zu", u);
    return buf;
}

std::string article_id(std::size_t u, std::size_t a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "u%03zu-a%02zu", u, a);
    return buf;
}

}  // namespace

std::vector<Article> make_style_articles(const StyleCorpusOptions& options) {
    std::vector<Article> out;
    Rng rng(mix_seed(options.seed, 0x5717e));
    for (std::size_t u = 0; u < options.users; ++u) {
        const UserStyle style = make_user_style(rng);
        for (std::size_t a = 0; a < options.articles_per_user; ++a) {
            const auto& w = style.words;
            std::string body = w[rng.index(w.size())] + " " + pick(rng, kCities) + " " + pick(rng, kShops) + " " +
                               pick(rng, kFiller) + " " + pick(rng, kProducts) + " " +
                               std::to_string(1 + rng.index(99)) + " " + w[rng.index(w.size())] + " " +
                               w[rng.index(w.size())] + " " + style.emoji + style.punct;
            const auto ts = static_cast<std::int64_t>(1700000000 + u * 100000 + a * 3600 + rng.index(600));
            out.push_back(make_article(article_id(u, a), user_id(u), std::move(body), ts));
        }
    }
    return out;
}

Corpus make_style_corpus(const StyleCorpusOptions& options) {
    return Corpus::from_articles(make_style_articles(options));
}

Corpus make_two_style_corpus(std::size_t users, std::size_t articles_per_user, std::uint64_t seed,
                             std::uint64_t salt) {
    Rng user_rng(mix_seed(seed, 0x2517));
    Rng text_rng(mix_seed(mix_seed(seed, 0x7e47), salt));
    std::vector<Article> articles;
    for (std::size_t u = 0; u < users; ++u) {
        const bool family_a = u < users / 2;
        std::vector<std::string> vocab;
        for (std::size_t i = 0; i < kStyleA.size(); ++i) vocab.emplace_back(family_a ? kStyleA[i] : kStyleB[i]);
        user_rng.shuffle(std::span<std::string>(vocab));
        vocab.resize(8);
        for (std::size_t a = 0; a < articles_per_user; ++a) {
            std::string body;
            for (std::size_t k = 0; k < 12; ++k) {
                if (k) body += ' ';
                body += vocab[text_rng.index(vocab.size())];
            }
            const auto ts = static_cast<std::int64_t>(1700000000 + u * 100000 + a * 3600);
            articles.push_back(make_article(article_id(u, a) + "-s" + std::to_string(salt), user_id(u),
                                            std::move(body), ts));
        }
    }
    return Corpus::from_articles(std::move(articles));
}

std::vector<eval::NoteBenchCase> make_bench_cases(const Corpus& corpus) {
    std::vector<eval::NoteBenchCase> cases;
    for (const auto& user : corpus.users()) {
        for (std::size_t i = 0; i + 1 < user.articles.size(); ++i) {
            const auto& ref = user.articles[i];
            const auto& gold = user.articles[i + 1];
            std::string summary;
            for (const auto& f : llm::key_facts(gold.body)) summary += (summary.empty() ? "" : " ") + f;
            cases.push_back({gold.id, summary, ref.body, gold.body, user.user_id});
        }
    }
    return cases;
}

std::string corrupt_numbers(std::string_view text, std::uint64_t seed) {
    Rng rng(seed);
    std::string out;
    std::size_t i = 0;
    while (i < text.size()) {
        if (!std::isdigit(static_cast<unsigned char>(text[i]))) {
            out.push_back(text[i++]);
            continue;
        }
        std::size_t j = i;
        while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
        const std::string original(text.substr(i, j - i));
        std::string replacement;
        do {
            replacement = std::to_string(1 + rng.index(999));
        } while (replacement == original);
        out += replacement;
        i = j;
    }
    return out;
}

}  // namespace sag::synthetic
