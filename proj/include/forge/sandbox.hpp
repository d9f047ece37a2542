#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "forge/common.hpp"

namespace forge::sandbox {

using Millis = std::chrono::milliseconds;

enum class ExecStatus {
    Success,
    NonZeroExit,
    // Exit code 0 but no image file was produced.
    NoArtifact,
    Timeout,
    LaunchFailure,
};

std::string_view to_string(ExecStatus status);
ExecStatus exec_status_from_string(std::string_view name);

struct ExecutionRequest {
    std::string guest_script;
    Millis timeout{std::chrono::seconds(120)};
    bool trace_enabled = false;
    std::string env_manifest_id = "default";
};

struct TraceEntry {
    std::string kind;
    json attributes;  // full record as emitted by the tracer, including "kind"
};

struct TraceLog {
    std::vector<TraceEntry> entries;
    std::string raw;

    std::size_t count(std::string_view kind) const;
    std::map<std::string, std::size_t> histogram() const;
};

struct Artifact {
    std::string name;  // path relative to the run's working directory
    std::string bytes;
};

struct ExecutionResult {
    ExecStatus status = ExecStatus::LaunchFailure;
    std::optional<int> exit_code;
    std::optional<int> term_signal;
    double wall_time_ms = 0.0;
    std::string stdout_text;
    std::string stderr_text;
    std::vector<Artifact> artifacts;
    std::optional<TraceLog> trace;

    bool ok() const { return status == ExecStatus::Success; }
    std::vector<std::string> artifact_names() const;
    // Bytes of the first artifact in name order, or empty.
    const std::string& primary_image() const;
    // Text handed to a repair prompt when the run did not succeed.
    std::string failure_message() const;
};

json to_json(const ExecutionResult& result);

// A pinned guest environment: interpreter plus the package versions it is
// expected to provide.
struct EnvManifest {
    std::string id;
    std::string interpreter = "python3";
    std::map<std::string, std::string> packages;
    std::map<std::string, std::string> env;
};

EnvManifest env_manifest_from_json(const json& j);
json to_json(const EnvManifest& m);

struct SandboxConfig {
    std::filesystem::path scratch_root;  // empty: a directory under the system temp dir
    std::size_t memory_limit_bytes = std::size_t{2} << 30;
    std::size_t output_cap_bytes = std::size_t{4} << 20;
    bool isolate_network = true;
    bool keep_workdirs = false;
    std::vector<EnvManifest> manifests;  // "default" is added when absent
};

// Runs guest scripts in a fresh per-run working directory under a process
// group that is killed at the deadline. Guest failures are reported through
// ExecutionResult::status; nothing thrown from execute() describes the guest.
class Sandbox {
public:
    explicit Sandbox(SandboxConfig config = {});
    ~Sandbox();
    Sandbox(const Sandbox&) = delete;
    Sandbox& operator=(const Sandbox&) = delete;

    ExecutionResult execute(const ExecutionRequest& req) const;

    // Same as execute() with the tracer attached. Throws TraceUnavailable when
    // the tracer reports it could not hook the plotting library.
    ExecutionResult trace_execute(const ExecutionRequest& req) const;

    const EnvManifest* find_manifest(std::string_view id) const;
    void add_manifest(EnvManifest manifest);
    void load_manifests(const std::filesystem::path& dir);
    const SandboxConfig& config() const { return config_; }
    const std::filesystem::path& scratch_root() const { return scratch_root_; }

    std::size_t runs_started() const;

private:
    ExecutionResult run(const ExecutionRequest& req, bool trace) const;

    SandboxConfig config_;
    std::filesystem::path scratch_root_;
    std::filesystem::path boot_script_;
    std::filesystem::path mpl_cache_;
    bool owns_scratch_ = false;
    mutable std::mutex mu_;
    std::map<std::string, EnvManifest, std::less<>> manifests_;
    mutable std::atomic<std::size_t> runs_{0};
};

bool is_image_file_name(std::string_view name);

// Returns the body of the first ```python fenced block with surrounding blank
// lines removed, each line newline-terminated. Throws NoCodeBlock when no such block exists.
std::string extract_code_block(std::string_view response);
std::vector<std::string> extract_all_code_blocks(std::string_view response);

}  // namespace forge::sandbox
