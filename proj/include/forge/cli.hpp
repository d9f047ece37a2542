#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "forge/agent.hpp"
#include "forge/bench.hpp"
#include "forge/engine.hpp"
#include "forge/eval.hpp"
#include "forge/llm.hpp"
#include "forge/reward.hpp"
#include "forge/sandbox.hpp"

namespace forge::cli {

struct SandboxSettings {
    double timeout_s = 120;
    std::size_t memory_mb = 2048;
    std::size_t output_cap_mb = 4;
    bool isolate_network = true;
    bool keep_workdirs = false;
    std::string scratch_root;
    std::string manifests_dir;
};

struct EngineSettings {
    int k = 5;
    int max_repairs = 2;
    std::size_t sg_count = 0;
    std::uint64_t sg_seed = 0;
    std::size_t workers = 1;
    bool run_ir = true;
    bool run_id = true;
};

struct AgentSettings {
    int max_iterations = 10;
    double threshold = 90;
    int max_repairs_per_iteration = 2;
};

struct EvalSettings {
    std::string model_name = "model";
    bool failed_exec_scores_zero = true;
    std::size_t workers = 1;
};

struct RewardSettings {
    std::string host = "127.0.0.1";
    int port = 8700;
    int judge_attempts = 2;
    std::string std_kind = "population";  // advantage normalization: population or sample
};

struct BenchSettings {
    std::size_t k = 3000;
    std::size_t n = 1000;
    std::string rank_mode = "lexicographic";  // or "weighted"
    double score_weight = 1.0;
    double iteration_weight = 1.0;
    std::string assignment = "all";  // or "partition"
    std::vector<std::string> annotators;
    int lease_s = 600;
    std::string host = "127.0.0.1";
    int port = 8701;
};

struct GroundingSettings {
    std::size_t workers = 1;
};

struct RunConfig {
    bool mock_mode = false;
    std::string mock_script;  // mock script JSON or a gateway transcript (.jsonl)
    std::string transcript;   // where the gateway records every completion
    std::map<std::string, llm::ProviderConfig> providers;
    std::map<std::string, std::string> routing;
    SandboxSettings sandbox;
    EngineSettings engine;
    AgentSettings agent;
    EvalSettings eval;
    RewardSettings reward;
    BenchSettings bench;
    GroundingSettings grounding;
    std::string log_level = "info";
};

// Validates and merges over the defaults. Unknown keys, wrong types and
// out-of-range values throw SchemaError naming the field path.
RunConfig config_from_json(const json& j);
// A missing file is a SchemaError; an empty file yields the defaults.
RunConfig load_config(const std::filesystem::path& path);
json to_json(const RunConfig& c);

sandbox::Millis timeout_of(const RunConfig& c);
std::unique_ptr<sandbox::Sandbox> make_sandbox(const RunConfig& c);
std::unique_ptr<llm::Gateway> make_gateway(const RunConfig& c);
engine::EngineConfig engine_config(const RunConfig& c);
agent::AgentConfig agent_config(const RunConfig& c);
eval::EvalOptions eval_options(const RunConfig& c);
bench::RankOptions rank_options(const RunConfig& c);
bench::QueueOptions queue_options(const RunConfig& c);

// Entry point of the forge binary. JSON results go to stdout, logs to
// stderr. Returns 0 on success, 1 on a domain error, 2 on a usage error.
int run(int argc, char** argv);

}  // namespace forge::cli
