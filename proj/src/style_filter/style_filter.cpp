#include "sag/style_filter/style_filter.hpp"

#include "sag/common/error.hpp"

namespace sag {

ScoreMatrix::ScoreMatrix(std::string user_id, std::vector<std::string> article_ids)
    : user_id_(std::move(user_id)), article_ids_(std::move(article_ids)) {
    const std::size_t k = article_ids_.size();
    scores_.assign(k < 2 ? 0 : k * (k - 1) / 2, 0.0);
}

std::size_t ScoreMatrix::index(std::size_t i, std::size_t j) const {
    const std::size_t k = article_ids_.size();
    if (!(i < j && j < k)) {
        throw InvalidArgument("score matrix entry (" + std::to_string(i) + ", " + std::to_string(j) +
                              ") is outside the upper triangle");
    }
    // rows 0..i-1 contribute (k-1) + (k-2) + ... + (k-i) entries
    return i * (2 * k - i - 1) / 2 + (j - i - 1);
}

double ScoreMatrix::score(std::size_t i, std::size_t j) const { return scores_[index(i, j)]; }

void ScoreMatrix::set(std::size_t i, std::size_t j, double value) { scores_[index(i, j)] = value; }

ScoreMatrix score_user_matrix(const EncoderParams& params, const UserCollection& collection) {
    std::vector<std::string> ids;
    std::vector<StyleVector> vecs;
    for (const auto& a : collection.articles) {
        ids.push_back(a.id);
        try {
            vecs.push_back(encode(params, a.body));
        } catch (const Error& e) {
            throw Error("cannot encode article " + a.id + ": " + e.what());
        }
    }
    ScoreMatrix m(collection.user_id, std::move(ids));
    for (std::size_t i = 0; i < vecs.size(); ++i)
        for (std::size_t j = i + 1; j < vecs.size(); ++j) m.set(i, j, cosine_sim(vecs[i], vecs[j]));
    return m;
}

std::vector<StylePair> select_pairs(const ScoreMatrix& matrix, const UserCollection& collection,
                                    const FilterConfig& config) {
    const auto& arts = collection.articles;
    if (matrix.size() != arts.size()) throw InvalidArgument("score matrix does not match collection " + collection.user_id);
    std::vector<StylePair> out;
    for (std::size_t i = 0; i < arts.size(); ++i) {
        if (arts[i].word_count < config.min_words) continue;
        for (std::size_t j = i + 1; j < arts.size(); ++j) {
            if (arts[j].word_count < config.min_words) continue;
            const double s = matrix.score(i, j);
            if (s > config.threshold) out.push_back({collection.user_id, arts[i].id, arts[j].id, s});
        }
    }
    return out;
}

FilteredDatasetMeta build_filtered_dataset(const Corpus& corpus, const EncoderParams& params,
                                           const FilterConfig& config,
                                           const std::function<void(const StylePair&)>& sink) {
    FilteredDatasetMeta meta{params.version, encoder_hash(params), config.threshold, config.min_words};
    for (const auto& user : corpus.users()) {
        std::vector<StylePair> pairs;
        try {
            pairs = select_pairs(score_user_matrix(params, user), user, config);
        } catch (const Error& e) {
            throw Error("style filter failed for user " + user.user_id + ": " + e.what());
        }
        for (const auto& p : pairs) sink(p);
    }
    return meta;
}

FilteredDataset build_filtered_dataset(const Corpus& corpus, const EncoderParams& params, const FilterConfig& config) {
    FilteredDataset ds;
    ds.meta = build_filtered_dataset(corpus, params, config, [&](const StylePair& p) { ds.pairs.push_back(p); });
    return ds;
}

namespace {

json meta_to_json(const FilteredDatasetMeta& m) {
    return {{"encoder_version", m.encoder_version},
            {"encoder_sha256", m.encoder_sha256},
            {"threshold", m.threshold},
            {"min_words", m.min_words}};
}

}  // namespace

FilteredDatasetMeta write_filtered_dataset(const Corpus& corpus, const EncoderParams& params,
                                           const FilterConfig& config, const fs::path& path) {
    AtomicWriter w(path);
    FilteredDatasetMeta meta{params.version, encoder_hash(params), config.threshold, config.min_words};
    w.stream() << dump_json(meta_to_json(meta)) << '\n';
    build_filtered_dataset(corpus, params, config, [&](const StylePair& p) {
        json j = {{"user_id", p.user_id}, {"reference_id", p.reference_id}, {"target_id", p.target_id}, {"score", p.score}};
        w.stream() << dump_json(j) << '\n';
    });
    w.commit();
    return meta;
}

FilteredDataset read_filtered_dataset(const fs::path& path) {
    FilteredDataset ds;
    bool have_meta = false;
    for_each_jsonl(path, [&](const json& j, std::size_t line) {
        try {
            if (!have_meta) {
                ds.meta.encoder_version = j.at("encoder_version").get<std::int64_t>();
                ds.meta.encoder_sha256 = j.value("encoder_sha256", "");
                ds.meta.threshold = j.at("threshold").get<double>();
                ds.meta.min_words = j.at("min_words").get<std::size_t>();
                have_meta = true;
                return;
            }
            ds.pairs.push_back({j.at("user_id").get<std::string>(), j.at("reference_id").get<std::string>(),
                                j.at("target_id").get<std::string>(), j.at("score").get<double>()});
        } catch (const json::exception& e) {
            throw ParseError(e.what(), line);
        }
    });
    if (!have_meta) throw ParseError("filtered dataset " + path.string() + " has no metadata line");
    return ds;
}

}  // namespace sag
