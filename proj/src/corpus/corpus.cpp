#include "sag/corpus/corpus.hpp"

#include "sag/common/error.hpp"
#include "sag/text/unicode.hpp"

#include <algorithm>
#include <unordered_set>

namespace sag {

Article make_article(std::string id, std::string user_id, std::string body, std::int64_t published_at,
                     std::optional<std::string> title) {
    Article a;
    a.id = std::move(id);
    a.user_id = std::move(user_id);
    a.title = std::move(title);
    a.body = std::move(body);
    a.published_at = published_at;
    a.word_count = text::word_count(a.body);
    return a;
}

bool chronologically_before(const Article& a, const Article& b) {
    if (a.published_at != b.published_at) return a.published_at < b.published_at;
    return a.id < b.id;
}

Corpus Corpus::from_articles(std::vector<Article> articles) {
    std::unordered_set<std::string> seen;
    std::map<std::string, std::vector<Article>> grouped;
    for (auto& a : articles) {
        if (a.body.empty()) throw InvalidArgument("article " + a.id + " has an empty body");
        if (!seen.insert(a.id).second) throw DuplicateIdError("duplicate article id " + a.id);
        a.word_count = text::word_count(a.body);
        grouped[a.user_id].push_back(std::move(a));
    }
    Corpus c;
    for (auto& [user, list] : grouped) {
        std::sort(list.begin(), list.end(), chronologically_before);
        c.users_.push_back({user, std::move(list)});
    }
    return c;
}

std::size_t Corpus::size() const {
    std::size_t n = 0;
    for (const auto& u : users_) n += u.articles.size();
    return n;
}

const UserCollection* Corpus::find_user(const std::string& user_id) const {
    auto it = std::lower_bound(users_.begin(), users_.end(), user_id,
                               [](const UserCollection& u, const std::string& id) { return u.user_id < id; });
    return it != users_.end() && it->user_id == user_id ? &*it : nullptr;
}

json article_to_json(const Article& a) {
    json j;
    j["id"] = a.id;
    j["user_id"] = a.user_id;
    j["title"] = a.title ? json(*a.title) : json(nullptr);
    j["body"] = a.body;
    j["published_at"] = a.published_at;
    return j;
}

Article article_from_json(const json& j) {
    if (!j.is_object()) throw ParseError("article record is not an object");
    auto str = [&](const char* key) -> std::string {
        auto it = j.find(key);
        if (it == j.end() || !it->is_string()) throw ParseError(std::string("missing string field '") + key + "'");
        return it->get<std::string>();
    };
    std::optional<std::string> title;
    if (auto it = j.find("title"); it != j.end() && !it->is_null()) {
        if (!it->is_string()) throw ParseError("field 'title' must be a string or null");
        title = it->get<std::string>();
    }
    auto ts = j.find("published_at");
    if (ts == j.end() || !ts->is_number_integer()) throw ParseError("missing integer field 'published_at'");
    return make_article(str("id"), str("user_id"), str("body"), ts->get<std::int64_t>(), std::move(title));
}

Corpus ingest_corpus(const fs::path& path) {
    std::vector<Article> articles;
    std::unordered_set<std::string> seen;
    for_each_jsonl(path, [&](const json& record, std::size_t line) {
        Article a;
        try {
            a = article_from_json(record);
        } catch (const ParseError& e) {
            throw ParseError(e.what(), line);
        }
        if (a.body.empty()) throw ParseError("article " + a.id + " has an empty body", line);
        if (!seen.insert(a.id).second) {
            throw DuplicateIdError("line " + std::to_string(line) + ": duplicate article id " + a.id);
        }
        articles.push_back(std::move(a));
    });
    return Corpus::from_articles(std::move(articles));
}

void write_corpus(const Corpus& corpus, const fs::path& path) {
    AtomicWriter w(path);
    for (const auto& u : corpus.users())
        for (const auto& a : u.articles) w.stream() << dump_json(article_to_json(a)) << '\n';
    w.commit();
}

CorpusStats corpus_stats(const Corpus& corpus) {
    CorpusStats s;
    s.num_users = corpus.users().size();
    for (const auto& u : corpus.users()) {
        s.num_articles += u.articles.size();
        for (const auto& a : u.articles) s.words_total += a.word_count;
    }
    return s;
}

json stats_to_json(const CorpusStats& s) {
    return {{"num_users", s.num_users}, {"num_articles", s.num_articles}, {"words_total", s.words_total}};
}

}  // namespace sag
