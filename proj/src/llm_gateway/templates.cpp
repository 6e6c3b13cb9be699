#include "sag/llm_gateway/templates.hpp"

#include <algorithm>
#include <sstream>

namespace sag::llm {
namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

}  // namespace

std::vector<ChatMessage> PromptTemplate::render(const json& variables) const {
    std::vector<ChatMessage> out;
    for (const auto& m : messages) {
        std::string text;
        std::size_t pos = 0;
        while (true) {
            const auto open = m.content.find("{{", pos);
            if (open == std::string::npos) {
                text.append(m.content, pos);
                break;
            }
            const auto close = m.content.find("}}", open + 2);
            if (close == std::string::npos) throw InvalidArgument("unterminated placeholder in template " + id());
            text.append(m.content, pos, open - pos);
            const std::string key = trim(std::string_view(m.content).substr(open + 2, close - open - 2));
            auto it = variables.find(key);
            if (it == variables.end() || !it->is_string()) {
                throw InvalidArgument("template " + id() + " needs variable '" + key + "'");
            }
            text += it->get<std::string>();
            pos = close + 2;
        }
        out.push_back({m.role, std::move(text)});
    }
    return out;
}

PromptTemplate parse_prompt_template(std::string_view text) {
    PromptTemplate t;
    std::istringstream in{std::string(text)};
    std::string line;
    bool in_body = false;
    std::string body;
    Role role = Role::User;
    auto flush = [&] {
        if (in_body) t.messages.push_back({role, trim(body)});
        body.clear();
    };
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.rfind("--- ", 0) == 0) {
            flush();
            role = parse_role(trim(line.substr(4)));
            in_body = true;
            continue;
        }
        if (in_body) {
            body += line;
            body += '\n';
        } else if (line.rfind("id:", 0) == 0) {
            t.name = trim(line.substr(3));
        } else if (line.rfind("version:", 0) == 0) {
            t.version = std::stoi(trim(line.substr(8)));
        } else if (!trim(line).empty()) {
            throw ParseError("unexpected prompt header line: " + line);
        }
    }
    flush();
    if (t.name.empty() || t.version <= 0 || t.messages.empty()) {
        throw ParseError("prompt template needs id, version and at least one section");
    }
    return t;
}

PromptLibrary PromptLibrary::load(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw Error("prompt directory " + dir.string() + " does not exist");
    PromptLibrary lib;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.path().extension() == ".prompt") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) lib.add(parse_prompt_template(read_file(f)));
    return lib;
}

fs::path default_prompts_dir() { return SAG_DEFAULT_PROMPTS_DIR; }

PromptLibrary PromptLibrary::load_default() { return load(default_prompts_dir()); }

void PromptLibrary::add(PromptTemplate t) {
    auto name = t.name;
    templates_[name] = std::move(t);
}

const PromptTemplate& PromptLibrary::get(const std::string& name) const {
    auto it = templates_.find(name);
    if (it == templates_.end()) throw InvalidArgument("no prompt template named '" + name + "'");
    return it->second;
}

}  // namespace sag::llm
