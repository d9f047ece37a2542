#include "forge/eval.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <spdlog/spdlog.h>

namespace forge::eval {

namespace fs = std::filesystem;

const BenchSample& BenchPackage::get(std::string_view id) const {
    for (const auto& s : samples) {
        if (s.id == id) return s;
    }
    throw Error(ErrorKind::UnknownSample, std::string(id));
}

std::string content_hash(const std::vector<BenchSample>& samples) {
    std::vector<const BenchSample*> sorted;
    for (const auto& s : samples) sorted.push_back(&s);
    std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->id < b->id; });
    std::string acc;
    for (const auto* s : sorted) {
        acc += s->id + '\n' + sha256_hex(s->image) + '\n' + sha256_hex(s->reference_code) + '\n';
    }
    return sha256_hex(acc);
}

BenchPackage load_bench(const fs::path& dir) {
    const fs::path manifest_path = dir / "manifest.json";
    if (!fs::exists(manifest_path)) throw Error(ErrorKind::Io, "no manifest.json in " + dir.string());
    BenchPackage pkg;
    std::string stored_hash;
    try {
        const json m = json::parse(read_file(manifest_path));
        pkg.name = m.value("name", "");
        stored_hash = m.value("content_hash", "");
        for (const auto& row : m.at("samples")) {
            BenchSample s;
            s.id = row.at("id").get<std::string>();
            s.image_path = row.at("image").get<std::string>();
            s.code_path = row.at("reference_code").get<std::string>();
            pkg.samples.push_back(std::move(s));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::SchemaError, manifest_path.string() + ": " + e.what());
    }
    std::set<std::string> ids;
    for (auto& s : pkg.samples) {
        if (!ids.insert(s.id).second) throw Error(ErrorKind::SchemaError, "duplicate sample id " + s.id);
        s.image = read_file(dir / s.image_path);
        s.reference_code = read_file(dir / s.code_path);
    }
    pkg.content_hash = content_hash(pkg.samples);
    if (!stored_hash.empty() && stored_hash != pkg.content_hash) {
        throw Error(ErrorKind::SchemaError, "benchmark content does not match manifest content_hash");
    }
    return pkg;
}

BenchPackage write_bench(std::string name, std::vector<BenchSample> samples, const fs::path& dir) {
    fs::create_directories(dir / "images");
    fs::create_directories(dir / "reference_codes");
    BenchPackage pkg;
    pkg.name = std::move(name);
    json rows = json::array();
    for (auto& s : samples) {
        s.image_path = "images/" + s.id + ".png";
        s.code_path = "reference_codes/" + s.id + ".py";
        write_file(dir / s.image_path, s.image);
        write_file(dir / s.code_path, s.reference_code);
        rows.push_back({{"id", s.id}, {"image", s.image_path}, {"reference_code", s.code_path}});
    }
    pkg.samples = std::move(samples);
    pkg.content_hash = content_hash(pkg.samples);
    const json m = {{"name", pkg.name}, {"content_hash", pkg.content_hash}, {"n_samples", pkg.samples.size()},
                    {"samples", rows}};
    write_file(dir / "manifest.json", m.dump(2) + "\n");
    return pkg;
}

std::vector<ModelResponse> load_responses(const fs::path& path) {
    std::vector<ModelResponse> out;
    for (const auto& row : read_jsonl(path)) {
        try {
            out.push_back({row.at("sample_id").get<std::string>(), row.at("response_text").get<std::string>()});
        } catch (const json::exception& e) {
            throw Error(ErrorKind::SchemaError, path.string() + ": " + e.what());
        }
    }
    return out;
}

namespace {

ScoreOutcome judged(llm::Gateway& gw, std::string_view task, std::string prompt, std::vector<std::string> images) {
    ScoreOutcome out;
    try {
        out.score = llm::parse_score(gw.complete(task, std::move(prompt), std::move(images)).text);
    } catch (const Error& e) {
        out.error = e.what();
        spdlog::warn("{} judge gave no score: {}", task, e.what());
    }
    return out;
}

}  // namespace

ScoreOutcome eval_image_score(llm::Gateway& gw, const std::string& original, const std::string& rendered,
                              std::string_view task) {
    return judged(gw, task, gw.render("img_score", {}), {original, rendered});
}

ScoreOutcome eval_code_score(llm::Gateway& gw, const std::string& reference_code, const std::string& generated_code,
                             std::string_view task) {
    return judged(gw, task,
                  gw.render("code_score", {{"reference_code", reference_code}, {"generated_code", generated_code}}),
                  {});
}

EvalRecord evaluate_sample(llm::Gateway& gw, const sandbox::Sandbox& sb, const BenchSample& sample,
                           const std::string& response_text, const EvalOptions& options) {
    EvalRecord r;
    r.sample_id = sample.id;
    try {
        r.generated_code = sandbox::extract_code_block(response_text);
        r.has_code = true;
    } catch (const Error&) {
        r.exec.status = sandbox::ExecStatus::NoArtifact;
        r.exec.stderr_text = "response has no python code block";
    }
    if (r.has_code) {
        sandbox::ExecutionRequest req;
        req.guest_script = r.generated_code;
        req.timeout = options.timeout;
        r.exec = sb.execute(req);
    }
    if (r.exec.ok()) {
        ScoreOutcome img = eval_image_score(gw, sample.image, r.exec.primary_image());
        r.image_score = img.score;
        r.image_error = img.error;
    } else {
        r.image_error = "not executed successfully";
    }
    ScoreOutcome code = eval_code_score(gw, sample.reference_code, r.generated_code);
    r.code_score = code.score;
    r.code_error = code.error;
    return r;
}

std::vector<EvalRecord> run_eval(llm::Gateway& gw, const sandbox::Sandbox& sb, const BenchPackage& bench,
                                 const std::vector<ModelResponse>& responses, const EvalOptions& options) {
    std::map<std::string, std::string, std::less<>> by_id;
    for (const auto& r : responses) by_id[r.sample_id] = r.response_text;
    for (const auto& [id, text] : by_id) {
        (void)text;
        bench.get(id);
    }
    std::vector<EvalRecord> out(bench.samples.size());
    parallel_for(bench.samples.size(), options.workers, [&](std::size_t i) {
        const BenchSample& s = bench.samples[i];
        auto it = by_id.find(s.id);
        out[i] = evaluate_sample(gw, sb, s, it == by_id.end() ? std::string() : it->second, options);
    });
    return out;
}

double eval_exec_rate(const std::vector<EvalRecord>& records) {
    if (records.empty()) throw Error(ErrorKind::EmptyCorpus, "no evaluation records");
    std::uint64_t ok = 0;
    for (const auto& r : records) ok += r.exec.ok();
    const std::uint64_t n = records.size();
    // Hundredths of a percent, half up: floor((2 * 10000 * ok + n) / (2n)).
    const std::uint64_t hundredths = (20000 * ok + n) / (2 * n);
    return static_cast<double>(hundredths) / 100.0;
}

BenchmarkReport aggregate(const std::vector<EvalRecord>& records, const EvalOptions& options) {
    if (records.empty()) throw Error(ErrorKind::EmptyCorpus, "no evaluation records");
    BenchmarkReport rep;
    rep.model_name = options.model_name;
    rep.n_samples = records.size();
    rep.exec_rate = eval_exec_rate(records);
    rep.image_convention =
        options.failed_exec_scores_zero ? "failed_exec_counts_zero" : "failed_exec_excluded";

    double image_sum = 0;
    double code_sum = 0;
    std::size_t image_n = 0;
    for (const auto& r : records) {
        if (r.exec.ok()) {
            ++rep.successes;
            if (r.image_score) {
                image_sum += *r.image_score;
                ++image_n;
                ++rep.image_scored;
            } else {
                ++rep.image_excluded;
            }
        } else {
            ++rep.image_failed_exec;
            if (options.failed_exec_scores_zero) ++image_n;
        }
        if (r.code_score) {
            code_sum += *r.code_score;
            ++rep.code_scored;
        } else {
            ++rep.code_excluded;
        }
    }
    rep.mean_image_score = image_n ? round2(image_sum / static_cast<double>(image_n)) : 0.0;
    rep.mean_code_score = rep.code_scored ? round2(code_sum / static_cast<double>(rep.code_scored)) : 0.0;
    rep.avg = round2((rep.mean_image_score + rep.mean_code_score) / 2.0);
    return rep;
}

json to_json(const BenchmarkReport& r) {
    return {{"model_name", r.model_name},
            {"n_samples", r.n_samples},
            {"successes", r.successes},
            {"exec_rate", r.exec_rate},
            {"mean_image_score", r.mean_image_score},
            {"mean_code_score", r.mean_code_score},
            {"avg", r.avg},
            {"image_scored", r.image_scored},
            {"image_excluded", r.image_excluded},
            {"image_failed_exec", r.image_failed_exec},
            {"code_scored", r.code_scored},
            {"code_excluded", r.code_excluded},
            {"image_convention", r.image_convention},
            {"bench_hash", r.bench_hash}};
}

json to_json(const EvalRecord& r) {
    json j = {{"sample_id", r.sample_id},
              {"has_code", r.has_code},
              {"generated_code", r.generated_code},
              {"exec_status", sandbox::to_string(r.exec.status)},
              {"exit_code", r.exec.exit_code ? json(*r.exec.exit_code) : json(nullptr)},
              {"image_score", r.image_score ? json(*r.image_score) : json(nullptr)},
              {"code_score", r.code_score ? json(*r.code_score) : json(nullptr)}};
    if (!r.exec.ok()) j["exec_error"] = r.exec.failure_message();
    if (!r.image_error.empty()) j["image_error"] = r.image_error;
    if (!r.code_error.empty()) j["code_error"] = r.code_error;
    return j;
}

EvalRecord eval_record_from_json(const json& j) {
    EvalRecord r;
    r.sample_id = j.at("sample_id").get<std::string>();
    r.has_code = j.value("has_code", true);
    r.generated_code = j.value("generated_code", "");
    r.exec.status = sandbox::exec_status_from_string(j.at("exec_status").get<std::string>());
    if (j.contains("exit_code") && !j["exit_code"].is_null()) r.exec.exit_code = j["exit_code"].get<int>();
    if (j.contains("image_score") && !j["image_score"].is_null()) r.image_score = j["image_score"].get<double>();
    if (j.contains("code_score") && !j["code_score"].is_null()) r.code_score = j["code_score"].get<double>();
    r.image_error = j.value("image_error", "");
    r.code_error = j.value("code_error", "");
    return r;
}

std::string report_json(const BenchmarkReport& report, const std::vector<EvalRecord>& records) {
    std::vector<const EvalRecord*> sorted;
    for (const auto& r : records) sorted.push_back(&r);
    std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->sample_id < b->sample_id; });
    json rows = json::array();
    for (const auto* r : sorted) rows.push_back(to_json(*r));
    return json({{"report", to_json(report)}, {"records", rows}}).dump(2) + "\n";
}

}  // namespace forge::eval
