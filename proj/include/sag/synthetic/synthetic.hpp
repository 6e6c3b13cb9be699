#pragma once

#include "sag/corpus/corpus.hpp"
#include "sag/eval/benchmark.hpp"

#include <cstdint>
#include <string>
#include <vector>

/// Seeded toy data for tests, acceptance checks and offline pipeline runs.
namespace sag::synthetic {

struct StyleCorpusOptions {
    std::size_t users = 40;
    std::size_t articles_per_user = 5;
    std::uint64_t seed = 0;
};

/// Short posts mixing content facts (a capitalised city and shop, a product
/// and a price) with a per-user style: a handful of signature words, an
/// emoji and a punctuation habit.
std::vector<Article> make_style_articles(const StyleCorpusOptions& options);
Corpus make_style_corpus(const StyleCorpusOptions& options);

/// Two style families with disjoint vocabularies; users [0, users/2) write
/// in the first, the rest in the second. Each user favours a subset of the
/// family vocabulary. `salt` varies the articles without changing the users.
Corpus make_two_style_corpus(std::size_t users, std::size_t articles_per_user, std::uint64_t seed,
                             std::uint64_t salt = 0);

/// Benchmark cases from consecutive articles of each user: the earlier one
/// is the style reference, the later one the gold article, and its key
/// facts the summary. Users need at least two articles.
std::vector<eval::NoteBenchCase> make_bench_cases(const Corpus& corpus);

/// Replaces every digit run in `text` with a different number.
std::string corrupt_numbers(std::string_view text, std::uint64_t seed);

}  // namespace sag::synthetic
