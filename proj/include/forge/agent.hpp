#pragma once

#include <optional>
#include <string>
#include <vector>

#include "forge/common.hpp"
#include "forge/llm.hpp"
#include "forge/sandbox.hpp"

namespace forge::agent {

// One round of the repair prompt. Throws PreconditionViolation on an empty
// error message and NoCodeBlock when the reply carries no python block.
std::string repair(llm::Gateway& gateway, const std::string& code, const std::string& error_message);

struct RepairStep {
    std::string error;   // failure message that was sent
    std::string result;  // "repaired", "no_code_block" or the gateway error
};

struct RenderOutcome {
    sandbox::ExecutionResult result;
    std::string code;  // the code that produced `result`
    int repairs = 0;   // repair prompts issued
    std::vector<RepairStep> steps;
};

// Executes `code`; on failure asks for a repair and re-executes, at most
// `max_repairs` times. Never throws for guest or judge failures.
RenderOutcome render_with_repair(llm::Gateway& gateway, const sandbox::Sandbox& sandbox, std::string code,
                                 int max_repairs, sandbox::Millis timeout, bool trace = false);

enum class AgentStatus { Running, Converged, MaxIter, Abandoned };
std::string_view to_string(AgentStatus s);

struct AgentConfig {
    int max_iterations = 10;
    double threshold = 90.0;  // converged iff score > threshold
    int max_repairs_per_iteration = 2;
    sandbox::Millis timeout{std::chrono::seconds(120)};
};

struct IterationRecord {
    int iteration = 0;
    bool rendered = false;
    int repairs = 0;
    std::optional<double> score;
    std::string code_sha256;
    std::string judge_response;
    std::string error;
    bool refined = false;
};

struct AgentState {
    int iteration = 0;
    std::optional<double> best_score;
    std::optional<std::string> best_code;
    std::string best_image;
    int repair_count = 0;
    AgentStatus status = AgentStatus::Running;
    std::vector<IterationRecord> transcript;
};

json to_json(const IterationRecord& r);
json to_json(const AgentState& s);

AgentState refine_loop(llm::Gateway& gateway, const sandbox::Sandbox& sandbox, const std::string& image,
                       const std::string& initial_code, const AgentConfig& config = {});

}  // namespace forge::agent
