#include "sag/slm/preferences.hpp"

#include "sag/text/unicode.hpp"

#include <optional>

namespace sag::slm {
namespace {

std::string required_string(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) throw ParseError(std::string("missing string field '") + key + "'");
    return it->get<std::string>();
}

template <class T, class FromJson>
std::vector<T> read_records(const fs::path& path, FromJson from_json) {
    std::vector<T> out;
    for_each_jsonl(path, [&](const json& j, std::size_t line) {
        try {
            out.push_back(from_json(j));
        } catch (const ParseError& e) {
            throw ParseError(e.what(), line);
        }
    });
    return out;
}

template <class T, class ToJson>
void write_records(const std::vector<T>& records, const fs::path& path, ToJson to_json) {
    AtomicWriter writer(path);
    for (const auto& r : records) writer.stream() << dump_json(to_json(r)) << '\n';
    writer.commit();
}

}  // namespace

SftExample to_example(const SftRecord& r) {
    return {encode_text(r.summary), encode_text(r.neutral), encode_text(r.reference), encode_text(r.target)};
}

json sft_record_to_json(const SftRecord& r) {
    return {{"user_id", r.user_id}, {"reference_id", r.reference_id}, {"target_id", r.target_id},
            {"summary", r.summary}, {"neutral", r.neutral},           {"reference", r.reference},
            {"target", r.target}};
}

SftRecord sft_record_from_json(const json& j) {
    return {required_string(j, "user_id"), required_string(j, "reference_id"), required_string(j, "target_id"),
            required_string(j, "summary"), required_string(j, "neutral"),      required_string(j, "reference"),
            required_string(j, "target")};
}

void write_sft_records(const std::vector<SftRecord>& records, const fs::path& path) {
    write_records(records, path, sft_record_to_json);
}

std::vector<SftRecord> read_sft_records(const fs::path& path) {
    return read_records<SftRecord>(path, sft_record_from_json);
}

PreferencePair to_pair(const PreferenceRecord& r, std::size_t max_len) {
    PreferencePair p;
    p.prompt = format_prompt(encode_text(r.summary), encode_text(r.neutral), encode_text(r.reference), max_len);
    p.chosen = encode_text(r.chosen);
    p.rejected = encode_text(r.rejected);
    return p;
}

json preference_record_to_json(const PreferenceRecord& r) {
    return {{"user_id", r.user_id}, {"target_id", r.target_id}, {"summary", r.summary},
            {"neutral", r.neutral}, {"reference", r.reference}, {"chosen", r.chosen},
            {"rejected", r.rejected}, {"edits_applied", r.edits_applied}};
}

PreferenceRecord preference_record_from_json(const json& j) {
    PreferenceRecord r{required_string(j, "user_id"), required_string(j, "target_id"), required_string(j, "summary"),
                       required_string(j, "neutral"), required_string(j, "reference"), required_string(j, "chosen"),
                       required_string(j, "rejected"), 0};
    if (auto it = j.find("edits_applied"); it != j.end()) {
        if (!it->is_number_unsigned()) throw ParseError("'edits_applied' must be a non-negative integer");
        r.edits_applied = it->get<std::size_t>();
    }
    if (r.chosen == r.rejected) throw ParseError("chosen and rejected are identical");
    return r;
}

void write_preference_records(const std::vector<PreferenceRecord>& records, const fs::path& path) {
    write_records(records, path, preference_record_to_json);
}

std::vector<PreferenceRecord> read_preference_records(const fs::path& path) {
    return read_records<PreferenceRecord>(path, preference_record_from_json);
}

std::string sanitize_generated(std::string_view bytes) {
    std::string out;
    for (char32_t cp : text::decode_utf8(bytes)) out += text::encode_utf8(cp);
    return out;
}

PreferenceBuildStats build_preference_dataset(const SLMParams& sft_params, const std::vector<SftRecord>& heldout,
                                              const llm::Gateway& gateway, const DecodingOptions& decoding,
                                              std::size_t max_len,
                                              const std::function<void(const PreferenceRecord&)>& on_pair) {
    PreferenceBuildStats stats;
    stats.examples = heldout.size();

    // Generation is local and cheap next to the gateway calls, so it runs
    // first and sequentially; corrections then go out concurrently.
    std::vector<std::string> generated(heldout.size());
    std::vector<Tokens> prompts(heldout.size());
    for (std::size_t i = 0; i < heldout.size(); ++i) {
        const auto& r = heldout[i];
        prompts[i] = format_prompt(encode_text(r.summary), encode_text(r.neutral), encode_text(r.reference), max_len);
        generated[i] = sanitize_generated(generate_text(sft_params, prompts[i], decoding));
    }

    std::vector<std::optional<llm::CorrectionResult>> corrected(heldout.size());
    const auto errors = gateway.parallel_for(heldout.size(), [&](std::size_t i) {
        if (generated[i].empty()) return;
        corrected[i] = gateway.correct_hallucinations(generated[i], heldout[i].summary, heldout[i].reference);
    });

    for (std::size_t i = 0; i < heldout.size(); ++i) {
        const auto& r = heldout[i];
        if (errors[i]) {
            try {
                std::rethrow_exception(errors[i]);
            } catch (const std::exception& e) {
                stats.failures.push_back(r.target_id + ": " + e.what());
            }
            continue;
        }
        if (!corrected[i]) {
            ++stats.dropped_invalid;
            continue;
        }
        PreferenceRecord pr{r.user_id,   r.target_id,  r.summary,    r.neutral, r.reference,
                            corrected[i]->verified_text, generated[i], corrected[i]->edits_applied};
        if (pr.chosen == pr.rejected) {
            ++stats.dropped_unchanged;
            continue;
        }
        const std::size_t longest = std::max(encode_text(pr.chosen).size(), encode_text(pr.rejected).size());
        if (pr.chosen.empty() || prompts[i].size() + longest > max_len) {
            ++stats.dropped_invalid;
            continue;
        }
        ++stats.pairs;
        if (on_pair) on_pair(pr);
    }
    return stats;
}

}  // namespace sag::slm
