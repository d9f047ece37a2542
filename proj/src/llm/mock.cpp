#include <algorithm>

#include "forge/llm.hpp"

namespace forge::llm {

MockReply MockReply::from_json(const json& j) {
    if (j.is_string()) return {Kind::Text, j.get<std::string>()};
    if (!j.is_object()) throw Error(ErrorKind::SchemaError, "mock reply must be a string or object");
    if (j.contains("error")) {
        const std::string e = j.at("error").get<std::string>();
        if (e == "refusal") return {Kind::Refusal, j.value("text", "")};
        if (e == "unavailable") return {Kind::Unavailable, j.value("text", "")};
        if (e == "auth") return {Kind::AuthFailure, j.value("text", "")};
        throw Error(ErrorKind::SchemaError, "unknown mock error kind: " + e);
    }
    return {Kind::Text, j.at("text").get<std::string>()};
}

MockScript MockScript::from_json(const json& j) {
    MockScript s;
    if (!j.is_object()) throw Error(ErrorKind::SchemaError, "mock script must be an object");
    for (const auto& [key, value] : j.items()) {
        if (key != "keyed" && key != "rules" && key != "default") {
            throw Error(ErrorKind::SchemaError, "mock script: unknown key " + key);
        }
    }
    if (j.contains("keyed")) {
        for (const auto& [hash, reply] : j.at("keyed").items()) s.add_keyed(hash, MockReply::from_json(reply));
    }
    if (j.contains("rules")) {
        std::size_t idx = 0;
        for (const auto& r : j.at("rules")) {
            MockRule rule;
            rule.task = r.value("task", "");
            if (r.contains("contains")) {
                if (r.at("contains").is_string()) {
                    rule.contains.push_back(r.at("contains").get<std::string>());
                } else {
                    rule.contains = r.at("contains").get<std::vector<std::string>>();
                }
            }
            rule.image_sha256 = r.value("image_sha256", "");
            if (r.contains("replies")) {
                for (const auto& reply : r.at("replies")) rule.replies.push_back(MockReply::from_json(reply));
            }
            if (r.contains("reply")) rule.replies.push_back(MockReply::from_json(r.at("reply")));
            if (rule.replies.empty()) {
                throw Error(ErrorKind::SchemaError, "mock script: rules[" + std::to_string(idx) + "] has no replies");
            }
            s.add_rule(std::move(rule));
            ++idx;
        }
    }
    if (j.contains("default")) s.set_default(MockReply::from_json(j.at("default")));
    return s;
}

MockScript MockScript::load(const std::filesystem::path& path) {
    try {
        return from_json(json::parse(read_file(path)));
    } catch (const json::exception& e) {
        throw Error(ErrorKind::SchemaError, path.string() + ": " + e.what());
    }
}

MockScript MockScript::from_transcript(const std::filesystem::path& path) {
    MockScript s;
    for (const auto& row : read_jsonl(path)) {
        if (!row.contains("response") || !row.contains("request_hash")) continue;
        s.add_keyed(row.at("request_hash").get<std::string>(), {MockReply::Kind::Text, row.at("response").get<std::string>()});
    }
    return s;
}

void MockScript::add_keyed(std::string request_hash, MockReply reply) {
    keyed_[std::move(request_hash)] = std::move(reply);
}

void MockScript::add_rule(MockRule rule) {
    rules_.push_back(std::move(rule));
    cursors_.push_back(0);
}

void MockScript::set_default(MockReply reply) {
    default_ = std::move(reply);
}

std::optional<MockReply> MockScript::next(const CompletionRequest& request) {
    if (auto it = keyed_.find(request.request_hash()); it != keyed_.end()) return it->second;
    for (std::size_t i = 0; i < rules_.size(); ++i) {
        const MockRule& rule = rules_[i];
        if (!rule.task.empty() && rule.task != request.task) continue;
        const bool all = std::all_of(rule.contains.begin(), rule.contains.end(), [&](const std::string& needle) {
            return request.prompt.find(needle) != std::string::npos;
        });
        if (!all) continue;
        if (!rule.image_sha256.empty()) {
            const bool hit = std::any_of(request.images.begin(), request.images.end(),
                                         [&](const std::string& img) { return sha256_hex(img) == rule.image_sha256; });
            if (!hit) continue;
        }
        const std::size_t at = std::min(cursors_[i], rule.replies.size() - 1);
        if (cursors_[i] < rule.replies.size()) ++cursors_[i];
        return rule.replies[at];
    }
    return default_;
}

MockProvider::MockProvider(std::string name, MockScript script) : name_(std::move(name)), script_(std::move(script)) {}

Completion MockProvider::complete(const CompletionRequest& request) {
    std::optional<MockReply> reply;
    {
        std::lock_guard lock(mu_);
        calls_.push_back(request);
        reply = script_.next(request);
    }
    if (!reply) throw Error(ErrorKind::ProviderRefusal, "mock: no scripted reply for task " + request.task);
    switch (reply->kind) {
        case MockReply::Kind::Refusal:
            throw Error(ErrorKind::ProviderRefusal, reply->text.empty() ? "mock refusal" : reply->text);
        case MockReply::Kind::Unavailable:
            throw Error(ErrorKind::TransportError, reply->text.empty() ? "mock provider unavailable" : reply->text);
        case MockReply::Kind::AuthFailure:
            throw Error(ErrorKind::AuthError, reply->text.empty() ? "mock credentials rejected" : reply->text);
        case MockReply::Kind::Text:
            break;
    }
    if (trim(reply->text).empty()) throw Error(ErrorKind::ProviderRefusal, "mock: empty reply");
    return {reply->text, 1, name_};
}

std::vector<CompletionRequest> MockProvider::calls() const {
    std::lock_guard lock(mu_);
    return calls_;
}

std::size_t MockProvider::call_count(std::string_view task) const {
    std::lock_guard lock(mu_);
    return static_cast<std::size_t>(
        std::count_if(calls_.begin(), calls_.end(), [&](const CompletionRequest& r) { return r.task == task; }));
}

}  // namespace forge::llm
