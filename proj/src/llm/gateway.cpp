#include <cmath>
#include <cstdlib>
#include <thread>

#include <spdlog/spdlog.h>

#include "forge/llm.hpp"

namespace forge::llm {

namespace {

std::string image_mime(std::string_view bytes) {
    if (bytes.substr(0, 3) == "\xFF\xD8\xFF") return "image/jpeg";
    if (bytes.substr(0, 4) == "GIF8") return "image/gif";
    if (bytes.substr(0, 2) == "BM") return "image/bmp";
    if (bytes.substr(0, 4) == "RIFF") return "image/webp";
    return "image/png";
}

bool retryable(int status) {
    return status == 0 || status == 408 || status == 429 || status >= 500;
}

}  // namespace

ProviderConfig provider_config_from_json(const std::string& name, const json& j) {
    if (!j.is_object()) throw Error(ErrorKind::SchemaError, "providers." + name + ": expected an object");
    ProviderConfig c;
    c.name = name;
    for (const auto& [key, value] : j.items()) {
        const std::string path = "providers." + name + "." + key;
        try {
            if (key == "kind") {
                c.kind = value.get<std::string>();
            } else if (key == "endpoint_url") {
                c.endpoint_url = value.get<std::string>();
            } else if (key == "model_name") {
                c.model_name = value.get<std::string>();
            } else if (key == "auth_env_var") {
                c.auth_env_var = value.get<std::string>();
            } else if (key == "max_retries") {
                c.max_retries = value.get<int>();
            } else if (key == "request_timeout_s") {
                c.request_timeout = Millis(static_cast<long long>(value.get<double>() * 1000.0));
            } else if (key == "backoff_base_ms") {
                c.backoff_base = Millis(value.get<long long>());
            } else if (key == "requests_per_minute") {
                c.requests_per_minute = value.get<double>();
            } else if (key == "mock_script") {
                c.mock_script = value.get<std::string>();
            } else {
                throw Error(ErrorKind::SchemaError, path + ": unknown key");
            }
        } catch (const json::exception& e) {
            throw Error(ErrorKind::SchemaError, path + ": " + e.what());
        }
    }
    const std::string prefix = "providers." + name;
    if (c.kind != "openai" && c.kind != "mock") throw Error(ErrorKind::SchemaError, prefix + ".kind: " + c.kind);
    if (c.max_retries < 0 || c.max_retries > 5) throw Error(ErrorKind::SchemaError, prefix + ".max_retries: must be 0..5");
    if (c.request_timeout.count() <= 0) throw Error(ErrorKind::SchemaError, prefix + ".request_timeout_s: must be > 0");
    if (c.requests_per_minute < 0) throw Error(ErrorKind::SchemaError, prefix + ".requests_per_minute: must be >= 0");
    if (c.kind == "openai" && c.endpoint_url.empty()) {
        throw Error(ErrorKind::SchemaError, prefix + ".endpoint_url: required");
    }
    return c;
}

json to_json(const ProviderConfig& c) {
    json j = {{"kind", c.kind},
              {"endpoint_url", c.endpoint_url},
              {"model_name", c.model_name},
              {"auth_env_var", c.auth_env_var},
              {"max_retries", c.max_retries},
              {"request_timeout_s", c.request_timeout.count() / 1000.0},
              {"backoff_base_ms", c.backoff_base.count()},
              {"requests_per_minute", c.requests_per_minute}};
    if (!c.mock_script.empty()) j["mock_script"] = c.mock_script.string();
    return j;
}

std::string CompletionRequest::request_hash() const {
    std::string key = "prompt:" + std::to_string(prompt.size()) + ":" + prompt;
    for (const auto& img : images) key += "|image:" + sha256_hex(img);
    return sha256_hex(key);
}

TokenBucket::TokenBucket(double requests_per_minute)
    : rate_per_sec_(requests_per_minute / 60.0),
      capacity_(std::max(1.0, requests_per_minute / 60.0)),
      tokens_(capacity_),
      last_(std::chrono::steady_clock::now()) {}

void TokenBucket::acquire() {
    if (rate_per_sec_ <= 0) return;
    std::unique_lock lock(mu_);
    for (;;) {
        const auto now = std::chrono::steady_clock::now();
        tokens_ = std::min(capacity_, tokens_ + std::chrono::duration<double>(now - last_).count() * rate_per_sec_);
        last_ = now;
        if (tokens_ >= 1.0) {
            tokens_ -= 1.0;
            return;
        }
        const double wait = (1.0 - tokens_) / rate_per_sec_;
        lock.unlock();
        std::this_thread::sleep_for(std::chrono::duration<double>(wait));
        lock.lock();
    }
}

OpenAiProvider::OpenAiProvider(ProviderConfig config, std::shared_ptr<HttpTransport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
    if (config_.requests_per_minute > 0) limiter_ = std::make_unique<TokenBucket>(config_.requests_per_minute);
}

std::string OpenAiProvider::build_body(const CompletionRequest& request) const {
    json content = json::array();
    content.push_back({{"type", "text"}, {"text", request.prompt}});
    for (const auto& img : request.images) {
        content.push_back({{"type", "image_url"},
                           {"image_url", {{"url", "data:" + image_mime(img) + ";base64," + base64_encode(img)}}}});
    }
    json body = {{"model", config_.model_name}, {"messages", {{{"role", "user"}, {"content", content}}}}};
    return body.dump();
}

Completion OpenAiProvider::complete(const CompletionRequest& request) {
    std::map<std::string, std::string> headers;
    if (!config_.auth_env_var.empty()) {
        const char* key = std::getenv(config_.auth_env_var.c_str());
        if (key == nullptr || *key == '\0') {
            throw Error(ErrorKind::AuthError, config_.name + ": environment variable " + config_.auth_env_var + " is not set");
        }
        headers["Authorization"] = std::string("Bearer ") + key;
    }
    const std::string body = build_body(request);
    const int max_attempts = config_.max_retries + 1;
    std::string last_error;
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        if (limiter_) limiter_->acquire();
        HttpResponse res = transport_->post_json(config_.endpoint_url, headers, body, config_.request_timeout);
        if (res.status == 401 || res.status == 403) {
            throw Error(ErrorKind::AuthError, config_.name + ": HTTP " + std::to_string(res.status));
        }
        if (res.status >= 200 && res.status < 300) {
            json parsed = json::parse(res.body, nullptr, false);
            if (parsed.is_discarded() || !parsed.contains("choices") || parsed["choices"].empty()) {
                throw Error(ErrorKind::TransportError, config_.name + ": malformed completion body");
            }
            const json& choice = parsed["choices"][0];
            const json message = choice.value("message", json::object());
            std::string text;
            if (message.contains("content") && message["content"].is_string()) text = message["content"];
            if (choice.value("finish_reason", "") == "content_filter" || trim(text).empty()) {
                throw Error(ErrorKind::ProviderRefusal, config_.name + ": empty or blocked content");
            }
            return {std::move(text), attempt, config_.name};
        }
        last_error = res.status == 0 ? res.error : "HTTP " + std::to_string(res.status);
        if (!retryable(res.status)) break;
        if (attempt < max_attempts) {
            const auto delay = config_.backoff_base * (1LL << (attempt - 1));
            spdlog::debug("{}: attempt {} failed ({}), retrying in {} ms", config_.name, attempt, last_error,
                          delay.count());
            std::this_thread::sleep_for(delay);
        }
    }
    throw Error(ErrorKind::TransportError, config_.name + ": " + last_error);
}

std::map<std::string, std::string> default_routing() {
    return {
        {std::string(tasks::kCaption), "gemini"},     {std::string(tasks::kCodeGen), "claude"},
        {std::string(tasks::kImageScore), "gemini"},  {std::string(tasks::kRescore), "gemini"},
        {std::string(tasks::kCodeScore), "gpt4o"},    {std::string(tasks::kRewardCode), "gpt4o"},
        {std::string(tasks::kRewardImage), "gpt4o"},
    };
}

Gateway::Gateway(GatewayOptions options) : options_(std::move(options)) {}

void Gateway::add_provider(std::shared_ptr<ChatProvider> provider) {
    if (options_.mock_mode && !provider->is_mock()) {
        throw Error(ErrorKind::PreconditionViolation, "mock mode forbids real provider " + provider->name());
    }
    providers_[provider->name()] = std::move(provider);
}

void Gateway::route(std::string task, std::string provider_name) {
    routes_[std::move(task)] = std::move(provider_name);
}

std::string Gateway::provider_for(std::string_view task) const {
    if (auto it = routes_.find(task); it != routes_.end()) {
        if (!providers_.count(it->second)) {
            throw Error(ErrorKind::SchemaError, "task " + std::string(task) + " routed to unknown provider " + it->second);
        }
        return it->second;
    }
    const auto defaults = default_routing();
    if (auto it = defaults.find(std::string(task)); it != defaults.end() && providers_.count(it->second)) {
        return it->second;
    }
    if (providers_.count("default")) return "default";
    if (providers_.size() == 1) return providers_.begin()->first;
    throw Error(ErrorKind::SchemaError, "no provider configured for task " + std::string(task));
}

std::shared_ptr<ChatProvider> Gateway::provider(std::string_view name) const {
    auto it = providers_.find(name);
    if (it == providers_.end()) throw Error(ErrorKind::SchemaError, "unknown provider " + std::string(name));
    return it->second;
}

Completion Gateway::complete(std::string_view task, std::string prompt, std::vector<std::string> images) {
    auto p = provider(provider_for(task));
    CompletionRequest req{std::string(task), std::move(prompt), std::move(images)};
    json record;
    if (!options_.transcript_path.empty()) {
        record = {{"task", req.task}, {"provider", p->name()}, {"request_hash", req.request_hash()},
                  {"prompt", req.prompt}, {"n_images", req.images.size()}};
    }
    try {
        Completion c = p->complete(req);
        c.provider = p->name();
        if (!options_.transcript_path.empty()) {
            record["response"] = c.text;
            record["attempts"] = c.attempts;
            std::lock_guard lock(transcript_mu_);
            append_line(options_.transcript_path, record.dump());
        }
        return c;
    } catch (const Error& e) {
        if (!options_.transcript_path.empty()) {
            record["error"] = e.what();
            std::lock_guard lock(transcript_mu_);
            append_line(options_.transcript_path, record.dump());
        }
        throw;
    }
}

std::shared_ptr<MockProvider> install_mock(Gateway& gateway, MockScript script) {
    auto mock = std::make_shared<MockProvider>("mock", std::move(script));
    gateway.add_provider(mock);
    return mock;
}

std::string complete(const ProviderConfig& config, const std::string& prompt, const std::vector<std::string>& images,
                     std::shared_ptr<HttpTransport> transport) {
    CompletionRequest req{"complete", prompt, images};
    if (config.kind == "mock") {
        MockProvider mock(config.name, config.mock_script.empty() ? MockScript{} : MockScript::load(config.mock_script));
        return mock.complete(req).text;
    }
    OpenAiProvider provider(config, std::move(transport));
    return provider.complete(req).text;
}

}  // namespace forge::llm
