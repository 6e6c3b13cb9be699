#pragma once

#include "sag/llm_gateway/gateway.hpp"
#include "sag/slm/generate.hpp"
#include "sag/slm/losses.hpp"

#include <functional>
#include <string>
#include <vector>

namespace sag::slm {

/// Text form of one inverse-generation example, as stored on disk.
struct SftRecord {
    std::string user_id;
    std::string reference_id;
    std::string target_id;
    std::string summary;
    std::string neutral;
    std::string reference;
    std::string target;

    friend bool operator==(const SftRecord&, const SftRecord&) = default;
};

SftExample to_example(const SftRecord& record);
json sft_record_to_json(const SftRecord& record);
SftRecord sft_record_from_json(const json& j);
void write_sft_records(const std::vector<SftRecord>& records, const fs::path& path);
std::vector<SftRecord> read_sft_records(const fs::path& path);

/// Text form of a preference pair. The prompt is rebuilt from the three
/// context sections.
struct PreferenceRecord {
    std::string user_id;
    std::string target_id;
    std::string summary;
    std::string neutral;
    std::string reference;
    std::string chosen;
    std::string rejected;
    std::size_t edits_applied = 0;

    friend bool operator==(const PreferenceRecord&, const PreferenceRecord&) = default;
};

PreferencePair to_pair(const PreferenceRecord& record, std::size_t max_len);
json preference_record_to_json(const PreferenceRecord& record);
PreferenceRecord preference_record_from_json(const json& j);
void write_preference_records(const std::vector<PreferenceRecord>& records, const fs::path& path);
std::vector<PreferenceRecord> read_preference_records(const fs::path& path);

/// Replaces invalid UTF-8 in generated bytes with U+FFFD so the text can be
/// stored as JSON and re-tokenised losslessly.
std::string sanitize_generated(std::string_view bytes);

struct PreferenceBuildStats {
    std::size_t examples = 0;
    std::size_t pairs = 0;
    std::size_t dropped_unchanged = 0;  // correction returned y_l verbatim
    std::size_t dropped_invalid = 0;    // empty side or pair longer than max_len
    std::vector<std::string> failures;  // "<target_id>: <error>"
};

/// For each held-out example: y_l = greedy SLM output for the example's
/// prompt, y_w = the gateway's corrected version of y_l. Pairs are emitted
/// to `on_pair` in input order; examples whose gateway call fails are
/// recorded in the stats and skipped.
PreferenceBuildStats build_preference_dataset(const SLMParams& sft_params, const std::vector<SftRecord>& heldout,
                                              const llm::Gateway& gateway, const DecodingOptions& decoding,
                                              std::size_t max_len,
                                              const std::function<void(const PreferenceRecord&)>& on_pair);

}  // namespace sag::slm
