#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "forge/common.hpp"
#include "forge/geometry.hpp"
#include "forge/llm.hpp"
#include "forge/sandbox.hpp"

namespace forge::engine {

enum class Pipeline { IR, ID, SG };
std::string_view to_string(Pipeline p);
Pipeline pipeline_from_string(std::string_view name);

struct SeedImage {
    std::string id;
    std::string image;
    std::string source_tag;
};

// Reads <dir>/index.jsonl ({id, path, source_tag}) or, without an index,
// every image file in <dir> with its stem as id. Sorted by id.
std::vector<SeedImage> load_seeds(const std::filesystem::path& dir);

struct ImageCodePair {
    std::string id;
    std::string image;
    std::string code;
    Pipeline pipeline = Pipeline::IR;
    std::string lineage;  // seed id (IR, ID) or template id (SG)
    std::optional<int> diversity_index;
    std::string caption;    // IR intermediate caption
    std::string principle;  // ID abstraction
    int repairs = 0;
    json params;  // SG parameters
};

struct QualityReport {
    std::optional<llm::JudgeVerdict> q_code;
    std::optional<llm::JudgeVerdict> q_image;
    std::optional<llm::JudgeVerdict> q_consistency;
    bool passed = false;
};

json to_json(const QualityReport& r);
QualityReport quality_report_from_json(const json& j);

struct Rejection {
    std::string id;
    std::string lineage;
    Pipeline pipeline = Pipeline::IR;
    std::optional<int> diversity_index;
    std::string stage;  // generation, render, principle, quality, dedup, undecided
    std::string reason;
};

json to_json(const Rejection& r);

struct EngineConfig {
    int k = 5;
    int max_repairs = 2;
    std::size_t sg_count = 0;
    std::uint64_t sg_seed = 0;
    std::size_t workers = 1;
    sandbox::Millis timeout{std::chrono::seconds(120)};
    bool run_ir = true;
    bool run_id = true;
};

struct DiversifyResult {
    std::string principle;
    std::vector<ImageCodePair> pairs;
    std::vector<Rejection> rejections;
};

struct FilterResult {
    std::vector<std::string> passed;     // ids, input order
    std::vector<std::string> rejected;
    std::vector<std::string> undecided;  // a judge was unavailable or unparseable
    std::vector<QualityReport> reports;  // one per input pair (undecided: passed=false)
};

struct RunSummary {
    std::size_t seeds = 0;
    std::size_t ir = 0;
    std::size_t id = 0;
    std::size_t sg = 0;
    std::size_t rejected = 0;
    std::size_t undecided = 0;
    std::size_t duplicates = 0;
    std::size_t resumed_units = 0;
};

json to_json(const RunSummary& s);

class Engine {
public:
    Engine(llm::Gateway& gateway, const sandbox::Sandbox& sandbox, EngineConfig config = {});

    // F_IR. Throws GenerationFailure or RenderFailure.
    ImageCodePair reproduce(const SeedImage& seed);
    // F_ID. Throws PrincipleFailure; individual variant failures become rejections.
    DiversifyResult diversify(const SeedImage& seed, int k);
    // Q_C -> Q_I -> Q_IC, stopping at the first negative verdict.
    // Throws JudgeUnavailable when a judge call fails or cannot be parsed.
    QualityReport quality_gate(const ImageCodePair& pair);
    FilterResult filter(const std::vector<ImageCodePair>& pairs);

    // Runs every pipeline and writes {images/, codes/, manifest.jsonl,
    // rejections.jsonl, summary.json, state.jsonl} under out_dir. Units already
    // recorded in state.jsonl are not regenerated.
    RunSummary run(const std::vector<SeedImage>& seeds, const std::filesystem::path& out_dir);

    const EngineConfig& config() const { return config_; }

private:
    ImageCodePair render_pair(ImageCodePair pair, const std::string& code, const char* what);

    llm::Gateway& gateway_;
    const sandbox::Sandbox& sandbox_;
    EngineConfig config_;
};

// Normalized-whitespace SHA-256 used for exact-duplicate removal.
std::string code_fingerprint(std::string_view code);

// A dataset directory produced by Engine::run.
struct DatasetEntry {
    ImageCodePair pair;
    QualityReport quality;
    std::string image_path;  // relative to the dataset root
    std::string code_path;
};

std::vector<DatasetEntry> load_dataset(const std::filesystem::path& dir);
json to_json(const ImageCodePair& p, const std::string& image_path, const std::string& code_path);

}  // namespace forge::engine
