#include "forge/bench.hpp"

#include <algorithm>
#include <set>

#include <spdlog/spdlog.h>

namespace forge::bench {

namespace fs = std::filesystem;

json to_json(const Candidate& c, const std::string& image_path, const std::string& rendered_path,
             const std::string& code_path) {
    json j = {{"id", c.id},
              {"image_path", image_path},
              {"rendered_path", rendered_path},
              {"code_path", code_path},
              {"final_score", c.final_score},
              {"iterations_used", c.iterations_used}};
    if (!c.transcript_path.empty()) j["transcript_path"] = c.transcript_path;
    return j;
}

std::vector<Candidate> load_candidates(const fs::path& dir) {
    const fs::path index = dir / "candidates.jsonl";
    if (!fs::exists(index)) throw Error(ErrorKind::Io, "no candidates.jsonl in " + dir.string());
    std::vector<Candidate> out;
    std::set<std::string> ids;
    for (const auto& row : read_jsonl(index)) {
        Candidate c;
        try {
            c.id = row.at("id").get<std::string>();
            c.final_score = row.at("final_score").get<double>();
            c.iterations_used = row.at("iterations_used").get<int>();
            c.transcript_path = row.value("transcript_path", "");
            c.image = read_file(dir / row.at("image_path").get<std::string>());
            c.rendered = read_file(dir / row.at("rendered_path").get<std::string>());
            c.code = read_file(dir / row.at("code_path").get<std::string>());
        } catch (const json::exception& e) {
            throw Error(ErrorKind::SchemaError, index.string() + ": " + e.what());
        }
        if (c.final_score < 0 || c.final_score > 100) {
            throw Error(ErrorKind::SchemaError, c.id + ": final_score outside [0,100]");
        }
        if (c.iterations_used < 1) throw Error(ErrorKind::SchemaError, c.id + ": iterations_used must be >= 1");
        if (!ids.insert(c.id).second) throw Error(ErrorKind::SchemaError, "duplicate candidate " + c.id);
        out.push_back(std::move(c));
    }
    return out;
}

void write_candidates(const std::vector<Candidate>& candidates, const fs::path& dir) {
    std::string index;
    for (const auto& c : candidates) {
        const std::string img = "images/" + c.id + ".png";
        const std::string ren = "rendered/" + c.id + ".png";
        const std::string code = "codes/" + c.id + ".py";
        write_file(dir / img, c.image);
        write_file(dir / ren, c.rendered);
        write_file(dir / code, c.code);
        index += to_json(c, img, ren, code).dump() + "\n";
    }
    write_file(dir / "candidates.jsonl", index);
}

std::vector<Candidate> rank_candidates(std::vector<Candidate> candidates, std::size_t k, const RankOptions& options) {
    if (k > candidates.size()) {
        throw Error(ErrorKind::InsufficientCandidates,
                    "k=" + std::to_string(k) + " exceeds " + std::to_string(candidates.size()) + " candidates");
    }
    auto less = [&](const Candidate& a, const Candidate& b) {
        if (options.mode == RankMode::Weighted) {
            const double ka = options.score_weight * a.final_score + options.iteration_weight * a.iterations_used;
            const double kb = options.score_weight * b.final_score + options.iteration_weight * b.iterations_used;
            if (ka != kb) return ka > kb;
        } else {
            if (a.final_score != b.final_score) return a.final_score > b.final_score;
            if (a.iterations_used != b.iterations_used) return a.iterations_used > b.iterations_used;
        }
        return a.id < b.id;
    };
    std::sort(candidates.begin(), candidates.end(), less);
    candidates.resize(k);
    return candidates;
}

json to_json(const Annotation& a) {
    return {{"annotator_id", a.annotator_id}, {"candidate_id", a.candidate_id}, {"style", a.style},
            {"content", a.content},           {"functionality", a.functionality}, {"timestamp", a.timestamp}};
}

Annotation annotation_from_json(const json& j) {
    Annotation a;
    try {
        a.annotator_id = j.at("annotator_id").get<std::string>();
        a.candidate_id = j.at("candidate_id").get<std::string>();
        a.style = j.at("style").get<int>();
        a.content = j.at("content").get<int>();
        a.functionality = j.at("functionality").get<int>();
        a.timestamp = j.value("timestamp", std::int64_t{0});
    } catch (const json::exception& e) {
        throw Error(ErrorKind::SchemaError, std::string("annotation: ") + e.what());
    }
    return a;
}

void validate(const Annotation& a) {
    if (a.annotator_id.empty()) throw Error(ErrorKind::RangeViolation, "annotator_id is empty");
    if (a.candidate_id.empty()) throw Error(ErrorKind::RangeViolation, "candidate_id is empty");
    auto check = [](const char* name, int v) {
        if (v < 1 || v > 5) throw Error(ErrorKind::RangeViolation, std::string(name) + "=" + std::to_string(v) + " outside 1..5");
    };
    check("style", a.style);
    check("content", a.content);
    check("functionality", a.functionality);
}

namespace {

std::map<std::string, Aggregate> aggregate_latest(const std::vector<const Annotation*>& kept) {
    std::map<std::string, std::pair<long, std::size_t>> sums;
    for (const auto* a : kept) {
        auto& s = sums[a->candidate_id];
        s.first += a->style + a->content + a->functionality;
        ++s.second;
    }
    std::map<std::string, Aggregate> out;
    for (const auto& [id, s] : sums) {
        out[id] = {static_cast<double>(s.first) / static_cast<double>(3 * s.second), s.second};
    }
    return out;
}

}  // namespace

std::map<std::string, Aggregate> ingest_annotations(const std::vector<Annotation>& annotations) {
    std::map<std::pair<std::string, std::string>, const Annotation*> latest;
    for (const auto& a : annotations) {
        validate(a);
        auto& slot = latest[{a.annotator_id, a.candidate_id}];
        if (!slot || a.timestamp >= slot->timestamp) slot = &a;
    }
    std::vector<const Annotation*> kept;
    for (const auto& [key, a] : latest) kept.push_back(a);
    return aggregate_latest(kept);
}

std::vector<std::string> select_final(const std::vector<Candidate>& ranked,
                                      const std::map<std::string, Aggregate>& aggregates, std::size_t n) {
    std::vector<std::pair<double, std::size_t>> eligible;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        auto it = aggregates.find(ranked[i].id);
        if (it != aggregates.end()) eligible.emplace_back(it->second.mean, i);
    }
    if (n > eligible.size()) {
        throw Error(ErrorKind::InsufficientCandidates,
                    "n=" + std::to_string(n) + " exceeds " + std::to_string(eligible.size()) + " annotated candidates");
    }
    std::stable_sort(eligible.begin(), eligible.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(ranked[eligible[i].second].id);
    return out;
}

AnnotationStore::AnnotationStore(fs::path log_path) : log_path_(std::move(log_path)) {
    if (!log_path_.empty() && fs::exists(log_path_)) {
        for (const auto& row : read_jsonl(log_path_)) {
            Annotation a = annotation_from_json(row);
            validate(a);
            insert(std::move(a));
        }
    }
}

bool AnnotationStore::insert(Annotation a) {
    const auto key = std::make_pair(a.annotator_id, a.candidate_id);
    log_.push_back(std::move(a));
    auto [it, fresh] = latest_.emplace(key, log_.size() - 1);
    if (!fresh && log_[it->second].timestamp <= log_.back().timestamp) it->second = log_.size() - 1;
    return !fresh;
}

bool AnnotationStore::submit(Annotation a) {
    validate(a);
    if (a.timestamp == 0) {
        a.timestamp = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::system_clock::now().time_since_epoch())
                          .count();
    }
    std::lock_guard lock(mu_);
    if (!log_path_.empty()) append_line(log_path_, to_json(a).dump());
    return insert(std::move(a));
}

std::vector<Annotation> AnnotationStore::all() const {
    std::lock_guard lock(mu_);
    return log_;
}

std::map<std::string, Aggregate> AnnotationStore::aggregates() const {
    std::lock_guard lock(mu_);
    std::vector<const Annotation*> kept;
    for (const auto& [key, idx] : latest_) kept.push_back(&log_[idx]);
    return aggregate_latest(kept);
}

bool AnnotationStore::has(const std::string& annotator, const std::string& candidate) const {
    std::lock_guard lock(mu_);
    return latest_.count({annotator, candidate}) > 0;
}

std::size_t AnnotationStore::count_by(const std::string& annotator) const {
    std::lock_guard lock(mu_);
    std::size_t n = 0;
    for (const auto& [key, idx] : latest_) n += key.first == annotator;
    return n;
}

void AnnotationStore::snapshot(const fs::path& path) const {
    json out = json::object();
    for (const auto& [id, agg] : aggregates()) out[id] = {{"mean", agg.mean}, {"annotators", agg.annotators}};
    write_file(path, out.dump(2) + "\n");
}

PackageResult package(const std::vector<Candidate>& ranked, const std::map<std::string, Aggregate>& aggregates,
                      const sandbox::Sandbox& sb, const PackageOptions& options, const fs::path& out_dir) {
    std::size_t eligible = 0;
    for (const auto& c : ranked) eligible += aggregates.count(c.id);
    // Full order of every annotated candidate; the first n that verify are packaged.
    const std::vector<std::string> order = select_final(ranked, aggregates, std::min(eligible, ranked.size()));
    if (order.size() < options.n) {
        throw Error(ErrorKind::InsufficientCandidates,
                    "n=" + std::to_string(options.n) + " exceeds " + std::to_string(order.size()) + " annotated candidates");
    }
    std::map<std::string, const Candidate*> by_id;
    for (const auto& c : ranked) by_id[c.id] = &c;

    PackageResult result;
    std::vector<eval::BenchSample> samples;
    for (const auto& id : order) {
        if (samples.size() == options.n) break;
        const Candidate& c = *by_id.at(id);
        std::string code = c.code;
        if (!options.patch_dir.empty() && fs::exists(options.patch_dir / (id + ".py"))) {
            code = read_file(options.patch_dir / (id + ".py"));
            result.patched.push_back(id);
        }
        sandbox::ExecutionRequest req;
        req.guest_script = code;
        req.timeout = options.timeout;
        const sandbox::ExecutionResult r = sb.execute(req);
        if (!r.ok()) {
            spdlog::warn("skipping {}: re-verification failed: {}", id, r.failure_message());
            result.skipped[id] = r.failure_message();
            continue;
        }
        samples.push_back({id, r.primary_image(), std::move(code), "", ""});
        result.selected.push_back(id);
    }
    if (samples.size() < options.n) {
        throw Error(ErrorKind::InsufficientCandidates, "only " + std::to_string(samples.size()) +
                                                           " candidates re-verified; need " + std::to_string(options.n));
    }
    result.package = eval::write_bench(options.name, std::move(samples), out_dir);
    return result;
}

}  // namespace forge::bench
