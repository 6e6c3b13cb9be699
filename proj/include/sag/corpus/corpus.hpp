#pragma once

#include "sag/common/error.hpp"
#include "sag/common/io.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sag {

struct Article {
    std::string id;
    std::string user_id;
    std::optional<std::string> title;
    std::string body;
    std::int64_t published_at = 0;  // UTC seconds
    std::size_t word_count = 0;

    friend bool operator==(const Article&, const Article&) = default;
};

/// Builds an Article, deriving word_count from the body.
Article make_article(std::string id, std::string user_id, std::string body, std::int64_t published_at,
                     std::optional<std::string> title = std::nullopt);

/// Chronological order: (published_at, id) ascending.
bool chronologically_before(const Article& a, const Article& b);

struct UserCollection {
    std::string user_id;
    std::vector<Article> articles;

    friend bool operator==(const UserCollection&, const UserCollection&) = default;
};

struct CorpusStats {
    std::size_t num_users = 0;
    std::size_t num_articles = 0;
    std::size_t words_total = 0;

    friend bool operator==(const CorpusStats&, const CorpusStats&) = default;
};

/// One UserCollection per user, ordered by user_id. Immutable after
/// construction, so it can be shared freely across threads.
class Corpus {
public:
    Corpus() = default;
    /// Groups, sorts and validates. Throws on duplicate ids or empty bodies.
    static Corpus from_articles(std::vector<Article> articles);

    const std::vector<UserCollection>& users() const { return users_; }
    std::size_t size() const;
    bool empty() const { return users_.empty(); }
    const UserCollection* find_user(const std::string& user_id) const;

    friend bool operator==(const Corpus&, const Corpus&) = default;

private:
    std::vector<UserCollection> users_;
};

class DuplicateIdError : public Error {
public:
    using Error::Error;
};

/// Reads line-delimited article records; see README for the schema.
Corpus ingest_corpus(const fs::path& path);
void write_corpus(const Corpus& corpus, const fs::path& path);

json article_to_json(const Article& a);
Article article_from_json(const json& j);

CorpusStats corpus_stats(const Corpus& corpus);
json stats_to_json(const CorpusStats& s);

}  // namespace sag
