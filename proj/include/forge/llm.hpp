#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "forge/common.hpp"

namespace forge::llm {

using Millis = std::chrono::milliseconds;
using Bindings = std::map<std::string, std::string, std::less<>>;

// ---------------------------------------------------------------------------
// Prompt templates

struct PromptTemplate {
    std::string id;
    std::string body;  // placeholders are written {{slot}}
    std::vector<std::string> required_slots;
};

std::vector<std::string> placeholder_slots(std::string_view body);

class PromptRegistry {
public:
    // Every template shipped under resources/prompts, keyed by file stem.
    static const PromptRegistry& builtin();

    void add(std::string id, std::string body);
    bool contains(std::string_view id) const;
    const PromptTemplate& get(std::string_view id) const;
    std::vector<std::string> ids() const;

    // Throws UnknownTemplate or MissingSlot. Bindings for slots the template
    // does not declare are ignored.
    std::string render(std::string_view id, const Bindings& bindings) const;

private:
    std::map<std::string, PromptTemplate, std::less<>> templates_;
};

// ---------------------------------------------------------------------------
// Judge response parsing

enum class VerdictKind { Qualified, Disqualified, Pass, Fail, SufficientMatch, FundamentalMismatch };
enum class VerdictFamily { CodeQuality, ImageQuality, Consistency };

std::string_view to_string(VerdictKind kind);
std::string_view to_string(VerdictFamily family);
VerdictKind verdict_kind_from_string(std::string_view name);

struct JudgeVerdict {
    VerdictKind kind = VerdictKind::Fail;
    std::string rationale;
    std::map<std::string, double> subscores;

    bool positive() const {
        return kind == VerdictKind::Qualified || kind == VerdictKind::Pass || kind == VerdictKind::SufficientMatch;
    }
};

json to_json(const JudgeVerdict& v);

// Value of the last numeric "Score:" line. Throws ParseFailure or OutOfRange.
double parse_score(std::string_view response);
JudgeVerdict parse_verdict(std::string_view response, VerdictFamily family);

// ---------------------------------------------------------------------------
// Providers

struct ProviderConfig {
    std::string name;
    std::string kind = "openai";  // "openai" (chat-completions compatible) or "mock"
    std::string endpoint_url;
    std::string model_name;
    std::string auth_env_var;
    int max_retries = 3;
    Millis request_timeout{60'000};
    Millis backoff_base{500};
    double requests_per_minute = 0.0;  // 0 disables the rate limiter
    std::filesystem::path mock_script;
};

ProviderConfig provider_config_from_json(const std::string& name, const json& j);
json to_json(const ProviderConfig& c);

struct CompletionRequest {
    std::string task;
    std::string prompt;
    std::vector<std::string> images;  // encoded image bytes

    // Stable key over prompt and image content; the task name is excluded so
    // transcripts replay across routing changes.
    std::string request_hash() const;
};

struct Completion {
    std::string text;
    int attempts = 1;
    std::string provider;
};

class ChatProvider {
public:
    virtual ~ChatProvider() = default;
    virtual const std::string& name() const = 0;
    virtual bool is_mock() const = 0;
    virtual Completion complete(const CompletionRequest& request) = 0;
};

struct HttpResponse {
    int status = 0;  // 0: the request never produced an HTTP status
    std::string body;
    std::string error;
};

class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    virtual HttpResponse post_json(const std::string& url, const std::map<std::string, std::string>& headers,
                                   const std::string& body, Millis timeout) = 0;
};

std::shared_ptr<HttpTransport> make_http_transport();

// Number of outbound connections attempted by any real transport in this
// process. Mock-mode runs must leave this at zero.
std::size_t network_connection_attempts();

class TokenBucket {
public:
    explicit TokenBucket(double requests_per_minute);
    void acquire();

private:
    double rate_per_sec_;
    double capacity_;
    double tokens_;
    std::chrono::steady_clock::time_point last_;
    std::mutex mu_;
};

// Chat-completions client with retry on transport failures, 429 and 5xx.
class OpenAiProvider final : public ChatProvider {
public:
    OpenAiProvider(ProviderConfig config, std::shared_ptr<HttpTransport> transport = make_http_transport());

    const std::string& name() const override { return config_.name; }
    bool is_mock() const override { return false; }
    Completion complete(const CompletionRequest& request) override;

    std::string build_body(const CompletionRequest& request) const;

private:
    ProviderConfig config_;
    std::shared_ptr<HttpTransport> transport_;
    std::unique_ptr<TokenBucket> limiter_;
};

// ---------------------------------------------------------------------------
// Mock provider: replays scripted replies for deterministic runs.

struct MockReply {
    enum class Kind { Text, Refusal, Unavailable, AuthFailure };
    Kind kind = Kind::Text;
    std::string text;

    static MockReply from_json(const json& j);
};

// Matches when every populated field matches the request. Replies are
// consumed in order; the last one repeats once the list is exhausted.
struct MockRule {
    std::string task;
    std::vector<std::string> contains;
    std::string image_sha256;
    std::vector<MockReply> replies;
};

class MockScript {
public:
    static MockScript from_json(const json& j);
    static MockScript load(const std::filesystem::path& path);
    // Builds keyed replies from a gateway transcript (request_hash -> response).
    static MockScript from_transcript(const std::filesystem::path& path);

    void add_keyed(std::string request_hash, MockReply reply);
    void add_rule(MockRule rule);
    void set_default(MockReply reply);

    std::optional<MockReply> next(const CompletionRequest& request);

private:
    std::map<std::string, MockReply> keyed_;
    std::vector<MockRule> rules_;
    std::vector<std::size_t> cursors_;
    std::optional<MockReply> default_;
};

class MockProvider final : public ChatProvider {
public:
    MockProvider(std::string name, MockScript script);

    const std::string& name() const override { return name_; }
    bool is_mock() const override { return true; }
    Completion complete(const CompletionRequest& request) override;

    std::vector<CompletionRequest> calls() const;
    std::size_t call_count(std::string_view task) const;

private:
    std::string name_;
    MockScript script_;
    mutable std::mutex mu_;
    std::vector<CompletionRequest> calls_;
};

// ---------------------------------------------------------------------------
// Gateway: task routing, prompt rendering, transcript logging.

namespace tasks {
inline constexpr std::string_view kCaption = "caption";
inline constexpr std::string_view kCodeGen = "code_gen";
inline constexpr std::string_view kPrinciple = "principle";
inline constexpr std::string_view kDiversify = "diversify";
inline constexpr std::string_view kAnalyze = "analyze";
inline constexpr std::string_view kRefineCaption = "refine_caption";
inline constexpr std::string_view kExplainDraft = "explain_draft";
inline constexpr std::string_view kRefineCode = "refine_code";
inline constexpr std::string_view kRepair = "repair";
inline constexpr std::string_view kRescore = "rescore";
inline constexpr std::string_view kJudgeCode = "q_code";
inline constexpr std::string_view kJudgeImage = "q_image";
inline constexpr std::string_view kJudgeConsistency = "q_consistency";
inline constexpr std::string_view kImageScore = "image_score";
inline constexpr std::string_view kCodeScore = "code_score";
inline constexpr std::string_view kRewardCode = "reward_code";
inline constexpr std::string_view kRewardImage = "reward_image";
}  // namespace tasks

// Judge assignment used when the configuration names no route for a task.
std::map<std::string, std::string> default_routing();

struct GatewayOptions {
    bool mock_mode = false;
    std::filesystem::path transcript_path;
};

class Gateway {
public:
    explicit Gateway(GatewayOptions options = {});

    // Throws PreconditionViolation when a real provider is added in mock mode.
    void add_provider(std::shared_ptr<ChatProvider> provider);
    void route(std::string task, std::string provider_name);
    std::string provider_for(std::string_view task) const;
    std::shared_ptr<ChatProvider> provider(std::string_view name) const;

    Completion complete(std::string_view task, std::string prompt, std::vector<std::string> images = {});

    std::string render(std::string_view template_id, const Bindings& bindings) const {
        return PromptRegistry::builtin().render(template_id, bindings);
    }

    bool mock_mode() const { return options_.mock_mode; }

private:
    GatewayOptions options_;
    std::map<std::string, std::shared_ptr<ChatProvider>, std::less<>> providers_;
    std::map<std::string, std::string, std::less<>> routes_;
    mutable std::mutex transcript_mu_;
};

// Convenience for the common mock wiring: one mock provider named "mock"
// serving every task.
std::shared_ptr<MockProvider> install_mock(Gateway& gateway, MockScript script);

// Runs one completion against `config` without a gateway.
std::string complete(const ProviderConfig& config, const std::string& prompt, const std::vector<std::string>& images,
                     std::shared_ptr<HttpTransport> transport = make_http_transport());

}  // namespace forge::llm
