#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "forge/common.hpp"
#include "forge/llm.hpp"
#include "forge/sandbox.hpp"

namespace forge::eval {

struct BenchSample {
    std::string id;
    std::string image;           // target image bytes
    std::string reference_code;
    std::string image_path;      // relative to the package root
    std::string code_path;
};

// {manifest.json, images/, reference_codes/}. content_hash covers every
// image and reference code so reports from different runs are comparable.
struct BenchPackage {
    std::string name;
    std::string content_hash;
    std::vector<BenchSample> samples;

    const BenchSample& get(std::string_view id) const;  // throws UnknownSample
};

std::string content_hash(const std::vector<BenchSample>& samples);
BenchPackage load_bench(const std::filesystem::path& dir);
// Writes the package files; image_path/code_path are filled in and the hash is
// recomputed. Returns the written package.
BenchPackage write_bench(std::string name, std::vector<BenchSample> samples, const std::filesystem::path& dir);

struct ModelResponse {
    std::string sample_id;
    std::string response_text;
};

std::vector<ModelResponse> load_responses(const std::filesystem::path& jsonl);

struct ScoreOutcome {
    std::optional<double> score;
    std::string error;  // why the score is absent
};

ScoreOutcome eval_image_score(llm::Gateway& gateway, const std::string& original, const std::string& rendered,
                              std::string_view task = llm::tasks::kImageScore);
// The generated code is judged even when empty.
ScoreOutcome eval_code_score(llm::Gateway& gateway, const std::string& reference_code,
                             const std::string& generated_code, std::string_view task = llm::tasks::kCodeScore);

struct EvalRecord {
    std::string sample_id;
    std::string generated_code;
    bool has_code = false;  // false: no python block; exec.status is NoArtifact and nothing ran
    sandbox::ExecutionResult exec;
    std::optional<double> image_score;
    std::optional<double> code_score;
    std::string image_error;
    std::string code_error;
};

json to_json(const EvalRecord& r);
EvalRecord eval_record_from_json(const json& j);

struct EvalOptions {
    std::string model_name = "model";
    sandbox::Millis timeout{std::chrono::seconds(120)};
    std::size_t workers = 1;
    // A failed execution contributes 0 to the image mean. When false,
    // failed executions are left out of the image mean instead.
    bool failed_exec_scores_zero = true;
};

EvalRecord evaluate_sample(llm::Gateway& gateway, const sandbox::Sandbox& sandbox, const BenchSample& sample,
                           const std::string& response_text, const EvalOptions& options);

// One record per bench sample, in package order. Samples without a response
// are evaluated as an empty response.
std::vector<EvalRecord> run_eval(llm::Gateway& gateway, const sandbox::Sandbox& sandbox, const BenchPackage& bench,
                                 const std::vector<ModelResponse>& responses, const EvalOptions& options);

// Percentage of Success records, rounded half up to two decimals using
// integer arithmetic. Throws EmptyCorpus.
double eval_exec_rate(const std::vector<EvalRecord>& records);

struct BenchmarkReport {
    std::string model_name;
    std::size_t n_samples = 0;
    std::size_t successes = 0;
    double exec_rate = 0;
    double mean_image_score = 0;  // two decimals
    double mean_code_score = 0;
    double avg = 0;               // mean of the two rounded means, two decimals
    std::size_t image_scored = 0;
    std::size_t image_excluded = 0;  // executed but the judge reply was unusable
    std::size_t image_failed_exec = 0;
    std::size_t code_scored = 0;
    std::size_t code_excluded = 0;
    std::string image_convention;
    std::string bench_hash;
};

BenchmarkReport aggregate(const std::vector<EvalRecord>& records, const EvalOptions& options = {});
json to_json(const BenchmarkReport& r);
// Report file body: summary plus per-sample records sorted by sample id.
std::string report_json(const BenchmarkReport& report, const std::vector<EvalRecord>& records);

}  // namespace forge::eval
