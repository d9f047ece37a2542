#include <algorithm>
#include <cctype>

#include "forge/llm.hpp"
#include "forge/resources.hpp"

namespace forge::llm {

namespace {

bool is_slot_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// Calls on_text for literal runs and on_slot for each well-formed {{name}}.
template <typename Text, typename Slot>
void scan(std::string_view body, Text&& on_text, Slot&& on_slot) {
    std::size_t pos = 0;
    while (pos < body.size()) {
        const std::size_t open = body.find("{{", pos);
        if (open == std::string_view::npos) break;
        std::size_t end = open + 2;
        while (end < body.size() && is_slot_char(body[end])) ++end;
        if (end > open + 2 && body.substr(end, 2) == "}}") {
            on_text(body.substr(pos, open - pos));
            on_slot(body.substr(open + 2, end - open - 2));
            pos = end + 2;
        } else {
            on_text(body.substr(pos, open + 2 - pos));
            pos = open + 2;
        }
    }
    on_text(body.substr(pos));
}

}  // namespace

std::vector<std::string> placeholder_slots(std::string_view body) {
    std::vector<std::string> slots;
    scan(body, [](std::string_view) {}, [&](std::string_view name) {
        if (std::find(slots.begin(), slots.end(), name) == slots.end()) slots.emplace_back(name);
    });
    return slots;
}

const PromptRegistry& PromptRegistry::builtin() {
    static const PromptRegistry registry = [] {
        PromptRegistry r;
        constexpr std::string_view prefix = "prompts/";
        constexpr std::string_view suffix = ".txt";
        for (const auto& name : resources::names()) {
            std::string_view n = name;
            if (n.substr(0, prefix.size()) != prefix || n.size() <= prefix.size() + suffix.size() ||
                n.substr(n.size() - suffix.size()) != suffix) {
                continue;
            }
            std::string id(n.substr(prefix.size(), n.size() - prefix.size() - suffix.size()));
            r.add(std::move(id), std::string(resources::get(name)));
        }
        return r;
    }();
    return registry;
}

void PromptRegistry::add(std::string id, std::string body) {
    if (templates_.count(id)) throw Error(ErrorKind::SchemaError, "template already registered: " + id);
    PromptTemplate t{id, std::move(body), {}};
    t.required_slots = placeholder_slots(t.body);
    templates_.emplace(std::move(id), std::move(t));
}

bool PromptRegistry::contains(std::string_view id) const {
    return templates_.find(id) != templates_.end();
}

const PromptTemplate& PromptRegistry::get(std::string_view id) const {
    auto it = templates_.find(id);
    if (it == templates_.end()) throw Error(ErrorKind::UnknownTemplate, std::string(id));
    return it->second;
}

std::vector<std::string> PromptRegistry::ids() const {
    std::vector<std::string> out;
    for (const auto& [id, _] : templates_) out.push_back(id);
    return out;
}

std::string PromptRegistry::render(std::string_view id, const Bindings& bindings) const {
    const PromptTemplate& t = get(id);
    for (const auto& slot : t.required_slots) {
        if (bindings.find(slot) == bindings.end()) {
            throw Error(ErrorKind::MissingSlot, std::string(id) + ": " + slot);
        }
    }
    std::string out;
    out.reserve(t.body.size());
    // Bound values are inserted verbatim and never rescanned.
    scan(t.body, [&](std::string_view text) { out.append(text); },
         [&](std::string_view name) { out.append(bindings.find(name)->second); });
    return out;
}

}  // namespace forge::llm
