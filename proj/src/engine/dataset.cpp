#include <algorithm>
#include <set>

#include "forge/engine.hpp"

namespace forge::engine {

namespace fs = std::filesystem;

std::string_view to_string(Pipeline p) {
    switch (p) {
        case Pipeline::IR: return "IR";
        case Pipeline::ID: return "ID";
        case Pipeline::SG: return "SG";
    }
    return "?";
}

Pipeline pipeline_from_string(std::string_view name) {
    if (name == "IR") return Pipeline::IR;
    if (name == "ID") return Pipeline::ID;
    if (name == "SG") return Pipeline::SG;
    throw Error(ErrorKind::SchemaError, "unknown pipeline " + std::string(name));
}

std::string code_fingerprint(std::string_view code) {
    return sha256_hex(normalize_whitespace(code));
}

std::vector<SeedImage> load_seeds(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw Error(ErrorKind::Io, "seed directory not found: " + dir.string());
    std::vector<SeedImage> seeds;
    const fs::path index = dir / "index.jsonl";
    if (fs::exists(index)) {
        for (const auto& row : read_jsonl(index)) {
            SeedImage s;
            try {
                s.id = row.at("id").get<std::string>();
                s.image = read_file(dir / row.at("path").get<std::string>());
                s.source_tag = row.value("source_tag", "");
            } catch (const json::exception& e) {
                throw Error(ErrorKind::SchemaError, index.string() + ": " + e.what());
            }
            seeds.push_back(std::move(s));
        }
    } else {
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (!entry.is_regular_file() || !sandbox::is_image_file_name(entry.path().filename().string())) continue;
            seeds.push_back({entry.path().stem().string(), read_file(entry.path()), "dir"});
        }
    }
    std::set<std::string> ids;
    for (const auto& s : seeds) {
        if (!ids.insert(s.id).second) throw Error(ErrorKind::SchemaError, "duplicate seed id " + s.id);
        if (!looks_like_image(s.image)) throw Error(ErrorKind::SchemaError, "seed " + s.id + " is not a decodable image");
    }
    std::sort(seeds.begin(), seeds.end(), [](const SeedImage& a, const SeedImage& b) { return a.id < b.id; });
    return seeds;
}

json to_json(const QualityReport& r) {
    json j = {{"passed", r.passed}};
    j["q_code"] = r.q_code ? llm::to_json(*r.q_code) : json(nullptr);
    j["q_image"] = r.q_image ? llm::to_json(*r.q_image) : json(nullptr);
    j["q_consistency"] = r.q_consistency ? llm::to_json(*r.q_consistency) : json(nullptr);
    return j;
}

QualityReport quality_report_from_json(const json& j) {
    auto verdict = [](const json& v) -> std::optional<llm::JudgeVerdict> {
        if (v.is_null()) return std::nullopt;
        llm::JudgeVerdict out;
        out.kind = llm::verdict_kind_from_string(v.at("kind").get<std::string>());
        out.rationale = v.value("rationale", "");
        if (v.contains("subscores")) out.subscores = v.at("subscores").get<std::map<std::string, double>>();
        return out;
    };
    QualityReport r;
    r.passed = j.value("passed", false);
    r.q_code = verdict(j.value("q_code", json(nullptr)));
    r.q_image = verdict(j.value("q_image", json(nullptr)));
    r.q_consistency = verdict(j.value("q_consistency", json(nullptr)));
    return r;
}

json to_json(const Rejection& r) {
    json j = {{"id", r.id}, {"lineage", r.lineage}, {"pipeline", to_string(r.pipeline)}, {"stage", r.stage},
              {"reason", r.reason}};
    if (r.diversity_index) j["diversity_index"] = *r.diversity_index;
    return j;
}

json to_json(const RunSummary& s) {
    return {{"seeds", s.seeds},
            {"counts", {{"IR", s.ir}, {"ID", s.id}, {"SG", s.sg}, {"total", s.ir + s.id + s.sg}}},
            {"rejected", s.rejected},
            {"undecided", s.undecided},
            {"duplicates", s.duplicates}};
}

json to_json(const ImageCodePair& p, const std::string& image_path, const std::string& code_path) {
    json j = {{"id", p.id},
              {"pipeline", to_string(p.pipeline)},
              {"lineage", p.lineage},
              {"image_path", image_path},
              {"code_path", code_path},
              {"image_sha256", sha256_hex(p.image)},
              {"code_sha256", code_fingerprint(p.code)},
              {"repairs", p.repairs}};
    if (p.diversity_index) j["diversity_index"] = *p.diversity_index;
    if (!p.caption.empty()) j["caption"] = p.caption;
    if (!p.principle.empty()) j["principle"] = p.principle;
    if (!p.params.is_null()) j["params"] = p.params;
    return j;
}

std::vector<DatasetEntry> load_dataset(const fs::path& dir) {
    const fs::path manifest = dir / "manifest.jsonl";
    if (!fs::exists(manifest)) throw Error(ErrorKind::Io, "no manifest.jsonl in " + dir.string());
    std::vector<DatasetEntry> out;
    for (const auto& row : read_jsonl(manifest)) {
        DatasetEntry e;
        try {
            e.pair.id = row.at("id").get<std::string>();
            e.pair.pipeline = pipeline_from_string(row.at("pipeline").get<std::string>());
            e.pair.lineage = row.at("lineage").get<std::string>();
            if (row.contains("diversity_index")) e.pair.diversity_index = row.at("diversity_index").get<int>();
            e.pair.caption = row.value("caption", "");
            e.pair.principle = row.value("principle", "");
            e.pair.repairs = row.value("repairs", 0);
            if (row.contains("params")) e.pair.params = row.at("params");
            e.image_path = row.at("image_path").get<std::string>();
            e.code_path = row.at("code_path").get<std::string>();
            if (row.contains("quality")) e.quality = quality_report_from_json(row.at("quality"));
        } catch (const json::exception& ex) {
            throw Error(ErrorKind::SchemaError, manifest.string() + ": " + ex.what());
        }
        e.pair.image = read_file(dir / e.image_path);
        e.pair.code = read_file(dir / e.code_path);
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace forge::engine
