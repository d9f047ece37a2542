#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "forge/common.hpp"
#include "forge/eval.hpp"
#include "forge/sandbox.hpp"

namespace forge::bench {

struct Candidate {
    std::string id;
    std::string image;     // original image
    std::string rendered;  // render of `code`
    std::string code;
    double final_score = 0;
    int iterations_used = 1;
    std::string transcript_path;
};

json to_json(const Candidate& c, const std::string& image_path, const std::string& rendered_path,
             const std::string& code_path);

// <dir>/candidates.jsonl rows {id, image_path, rendered_path, code_path,
// final_score, iterations_used, transcript_path?}; paths relative to dir.
std::vector<Candidate> load_candidates(const std::filesystem::path& dir);
void write_candidates(const std::vector<Candidate>& candidates, const std::filesystem::path& dir);

enum class RankMode { Lexicographic, Weighted };

struct RankOptions {
    RankMode mode = RankMode::Lexicographic;
    // Weighted mode key: score_weight * final_score + iteration_weight * iterations_used.
    double score_weight = 1.0;
    double iteration_weight = 1.0;
};

// Descending score, then descending iterations, then ascending id. Throws
// InsufficientCandidates when k exceeds the candidate count.
std::vector<Candidate> rank_candidates(std::vector<Candidate> candidates, std::size_t k, const RankOptions& options = {});

struct Annotation {
    std::string annotator_id;
    std::string candidate_id;
    int style = 0;
    int content = 0;
    int functionality = 0;
    std::int64_t timestamp = 0;  // ms since epoch; 0 means "now" on ingest through the store
};

json to_json(const Annotation& a);
Annotation annotation_from_json(const json& j);
void validate(const Annotation& a);  // throws RangeViolation

struct Aggregate {
    double mean = 0;  // over every dimension score of every retained annotation
    std::size_t annotators = 0;
};

// Keeps one annotation per (annotator, candidate): the latest timestamp, and
// among equal timestamps the later one in the sequence.
std::map<std::string, Aggregate> ingest_annotations(const std::vector<Annotation>& annotations);

// Top-n candidate ids by aggregate. Ties keep the order of `ranked`.
// Candidates without annotations are not eligible. Throws InsufficientCandidates.
std::vector<std::string> select_final(const std::vector<Candidate>& ranked,
                                      const std::map<std::string, Aggregate>& aggregates, std::size_t n);

// Append-only JSONL log plus in-memory latest-per-key view. Thread-safe.
class AnnotationStore {
public:
    explicit AnnotationStore(std::filesystem::path log_path);

    // Returns true when the annotation replaced an earlier one for the same key.
    bool submit(Annotation a);
    std::vector<Annotation> all() const;  // arrival order
    std::map<std::string, Aggregate> aggregates() const;
    bool has(const std::string& annotator, const std::string& candidate) const;
    std::size_t count_by(const std::string& annotator) const;
    void snapshot(const std::filesystem::path& path) const;

private:
    bool insert(Annotation a);

    std::filesystem::path log_path_;
    mutable std::mutex mu_;
    std::vector<Annotation> log_;
    std::map<std::pair<std::string, std::string>, std::size_t> latest_;
};

struct PackageOptions {
    std::string name = "bench";
    std::size_t n = 1000;
    std::filesystem::path patch_dir;  // <candidate id>.py files replacing the candidate code
    sandbox::Millis timeout{std::chrono::seconds(120)};
};

struct PackageResult {
    eval::BenchPackage package;
    std::vector<std::string> selected;  // packaged ids in selection order
    std::vector<std::string> patched;
    std::map<std::string, std::string> skipped;  // id -> reason
};

// Walks candidates in final-selection order, applies patches, re-executes
// every code and packages the first n that render Success. The packaged
// image is the render of the packaged code.
PackageResult package(const std::vector<Candidate>& ranked, const std::map<std::string, Aggregate>& aggregates,
                      const sandbox::Sandbox& sandbox, const PackageOptions& options,
                      const std::filesystem::path& out_dir);

enum class Assignment { All, Partition };

struct QueueOptions {
    Assignment assignment = Assignment::All;
    std::vector<std::string> annotators;  // required for Partition
    std::chrono::seconds lease{600};
};

struct ServerHandle;

// Annotation queue API: GET /v1/queue/next?annotator=, POST /v1/annotations,
// GET /v1/progress, GET /v1/images/<id>/{original,rendered}, GET /healthz.
class BenchServer {
public:
    BenchServer(std::vector<Candidate> ranked, AnnotationStore& store, QueueOptions options = {});
    ~BenchServer();

    // Next candidate for the annotator, or nullopt when their queue is done.
    std::optional<std::string> next_for(const std::string& annotator);
    json progress() const;

    int bind(const std::string& host, int port);
    void listen();
    void stop();

private:
    bool assigned(const std::string& annotator, std::size_t index) const;

    std::vector<Candidate> candidates_;
    std::map<std::string, std::size_t, std::less<>> index_;
    AnnotationStore& store_;
    QueueOptions options_;
    mutable std::mutex mu_;
    std::map<std::pair<std::string, std::string>, std::chrono::steady_clock::time_point> leases_;
    std::unique_ptr<ServerHandle> server_;
};

}  // namespace forge::bench
