#pragma once

#include "sag/llm_gateway/chat_client.hpp"

#include <map>
#include <string>
#include <vector>

namespace sag::llm {

/// A versioned prompt file:
///
///     id: <name>
///     version: <n>
///     --- system
///     ...
///     --- user
///     ... {{variable}} ...
///
/// Section bodies become chat messages in file order.
struct PromptTemplate {
    std::string name;
    int version = 0;
    std::vector<ChatMessage> messages;

    /// "<name>@<version>"
    std::string id() const { return name + "@" + std::to_string(version); }
    /// Substitutes {{variable}} placeholders. Throws InvalidArgument on a
    /// placeholder without a value.
    std::vector<ChatMessage> render(const json& variables) const;
};

PromptTemplate parse_prompt_template(std::string_view text);

/// Directory of the prompts shipped with the source tree.
fs::path default_prompts_dir();

class PromptLibrary {
public:
    /// Loads every *.prompt file in `dir`.
    static PromptLibrary load(const fs::path& dir);
    /// The prompts shipped with the source tree.
    static PromptLibrary load_default();

    void add(PromptTemplate t);
    const PromptTemplate& get(const std::string& name) const;

private:
    std::map<std::string, PromptTemplate> templates_;
};

}  // namespace sag::llm
