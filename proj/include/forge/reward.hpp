#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "forge/common.hpp"
#include "forge/llm.hpp"
#include "forge/sandbox.hpp"

namespace forge::reward {

struct RewardBreakdown {
    double r_fmt = 0;
    double r_exec = 0;
    double r_code = 0;
    double r_image = 0;
    double r_total = 0;
    bool provisional = false;  // a judge was unavailable; the request should be retried
    std::string exec_status;
    std::vector<std::string> notes;
};

json to_json(const RewardBreakdown& b);

// r_total = r_fmt + r_exec + r_code + r_image, summed left to right. r_image is
// forced to 0 when r_exec is 0.
RewardBreakdown combine(double r_fmt, double r_exec, double r_code, double r_image);

// 1 iff the response carries a ```python fenced block.
int format_reward(std::string_view response);

struct RewardOptions {
    sandbox::Millis timeout{std::chrono::seconds(120)};
    int judge_attempts = 2;  // per judge, before the reward is marked provisional
    double score_scale = 100.0;
};

class RewardService {
public:
    RewardService(llm::Gateway& gateway, const sandbox::Sandbox& sandbox, RewardOptions options = {});

    // Identical (response, reference) requests return the cached breakdown.
    // Provisional breakdowns are never cached.
    RewardBreakdown content_reward(const std::string& response, const std::string& reference_code,
                                   const std::string& reference_image);

    std::size_t cache_size() const;
    std::size_t computed() const { return computed_; }

private:
    std::optional<double> judge(std::string_view task, const std::string& prompt, std::vector<std::string> images,
                                std::vector<std::string>& notes);

    llm::Gateway& gateway_;
    const sandbox::Sandbox& sandbox_;
    RewardOptions options_;
    mutable std::mutex mu_;
    std::map<std::string, RewardBreakdown> cache_;
    std::atomic<std::size_t> computed_{0};
};

enum class StdKind { Population, Sample };
std::string_view to_string(StdKind k);
StdKind std_kind_from_string(std::string_view name);

// A_i = (r_i - mean) / std. All zeros when std < 1e-12 (and for a single
// rollout under Sample). Throws EmptyGroup.
std::vector<double> group_advantages(const std::vector<double>& rewards, StdKind std_kind = StdKind::Population);

struct DifficultyGroup {
    std::string query_id;
    std::vector<bool> successes;  // one flag per rollout
};

// Keeps a query iff lo <= successes/G <= hi. Groups without rollouts are dropped.
std::vector<std::string> difficulty_filter(const std::vector<DifficultyGroup>& groups, double lo = 0.25,
                                           double hi = 0.75);

struct Reference {
    std::string code;
    std::string image;
};

// Reference pairs keyed by sample id, read from a benchmark package
// (manifest.json) or an engine dataset (manifest.jsonl).
class ReferenceStore {
public:
    static ReferenceStore load(const std::filesystem::path& dir);
    void add(std::string id, Reference ref);
    const Reference& get(std::string_view id) const;  // throws UnknownSample
    std::size_t size() const { return refs_.size(); }

private:
    std::map<std::string, Reference, std::less<>> refs_;
};

struct ServerHandle;

// HTTP front end: POST /v1/reward, POST /v1/advantages, POST /v1/difficulty,
// GET /healthz.
class RewardServer {
public:
    RewardServer(RewardService& service, const ReferenceStore& store, StdKind std_kind = StdKind::Population);
    ~RewardServer();

    int bind(const std::string& host, int port);  // port 0 picks a free port
    void listen();                                // blocks until stop()
    void stop();

private:
    std::unique_ptr<ServerHandle> server_;
    RewardService& service_;
    const ReferenceStore& store_;
    StdKind std_kind_;
};

}  // namespace forge::reward
