#pragma once

#include "sag/corpus/corpus.hpp"
#include "sag/style_embed/encoder.hpp"

#include <functional>
#include <string>
#include <vector>

namespace sag {

/// Pairwise style scores of one user's articles in chronological order.
/// Only the strict upper triangle (i < j, earlier article first) is stored.
class ScoreMatrix {
public:
    ScoreMatrix() = default;
    ScoreMatrix(std::string user_id, std::vector<std::string> article_ids);

    const std::string& user_id() const { return user_id_; }
    const std::vector<std::string>& article_ids() const { return article_ids_; }
    std::size_t size() const { return article_ids_.size(); }
    std::size_t populated_entries() const { return scores_.size(); }

    /// Requires i < j < size(); throws InvalidArgument otherwise.
    double score(std::size_t i, std::size_t j) const;
    void set(std::size_t i, std::size_t j, double value);

private:
    std::size_t index(std::size_t i, std::size_t j) const;

    std::string user_id_;
    std::vector<std::string> article_ids_;
    std::vector<double> scores_;
};

struct StylePair {
    std::string user_id;
    std::string reference_id;  // earlier article
    std::string target_id;     // later article
    double score = 0.0;

    friend bool operator==(const StylePair&, const StylePair&) = default;
};

struct FilterConfig {
    double threshold = 0.7;
    std::size_t min_words = 50;
};

ScoreMatrix score_user_matrix(const EncoderParams& params, const UserCollection& collection);

/// Keeps (i, j), i < j, with score > threshold and both articles having at
/// least min_words word units, in (i, j) order.
std::vector<StylePair> select_pairs(const ScoreMatrix& matrix, const UserCollection& collection,
                                    const FilterConfig& config);

struct FilteredDatasetMeta {
    std::int64_t encoder_version = 0;
    std::string encoder_sha256;
    double threshold = 0.0;
    std::size_t min_words = 0;
};

struct FilteredDataset {
    FilteredDatasetMeta meta;
    std::vector<StylePair> pairs;
};

/// Runs the filter over every user in user_id order, handing pairs to `sink`
/// as each user completes. A failure aborts the run and names the user.
FilteredDatasetMeta build_filtered_dataset(const Corpus& corpus, const EncoderParams& params,
                                           const FilterConfig& config,
                                           const std::function<void(const StylePair&)>& sink);
FilteredDataset build_filtered_dataset(const Corpus& corpus, const EncoderParams& params, const FilterConfig& config);

/// Streams the dataset to `path`: a metadata line, then one line per pair.
FilteredDatasetMeta write_filtered_dataset(const Corpus& corpus, const EncoderParams& params,
                                           const FilterConfig& config, const fs::path& path);
FilteredDataset read_filtered_dataset(const fs::path& path);

}  // namespace sag
