#include "forge/engine.hpp"

#include <map>
#include <set>

#include <spdlog/spdlog.h>

#include "forge/agent.hpp"

namespace forge::engine {

namespace fs = std::filesystem;

namespace {

// Judges are the only gateway calls whose failure must not be confused with
// a negative verdict.
llm::JudgeVerdict judge(llm::Gateway& gw, std::string_view task, const std::string& prompt,
                        std::vector<std::string> images, llm::VerdictFamily family) {
    try {
        return llm::parse_verdict(gw.complete(task, prompt, std::move(images)).text, family);
    } catch (const Error& e) {
        throw Error(ErrorKind::JudgeUnavailable, std::string(task) + ": " + e.what());
    }
}

std::string unit_ir(const std::string& seed) { return "ir:" + seed; }
std::string unit_id(const std::string& seed) { return "id:" + seed; }
std::string unit_gate(const std::string& pair) { return "gate:" + pair; }
constexpr std::string_view kUnitSg = "sg";

Rejection rejection_from_json(const json& j) {
    Rejection r;
    r.id = j.at("id").get<std::string>();
    r.lineage = j.value("lineage", "");
    r.pipeline = pipeline_from_string(j.at("pipeline").get<std::string>());
    if (j.contains("diversity_index")) r.diversity_index = j.at("diversity_index").get<int>();
    r.stage = j.value("stage", "");
    r.reason = j.value("reason", "");
    return r;
}

std::string image_rel(const ImageCodePair& p) { return "images/" + p.id + ".png"; }
std::string code_rel(const ImageCodePair& p) { return "codes/" + p.id + ".py"; }

// Stores the pair files and returns the record journaled for it.
json store_pair(const fs::path& out, const ImageCodePair& p) {
    write_file(out / image_rel(p), p.image);
    write_file(out / code_rel(p), p.code);
    return to_json(p, image_rel(p), code_rel(p));
}

ImageCodePair restore_pair(const fs::path& out, const json& j) {
    ImageCodePair p;
    p.id = j.at("id").get<std::string>();
    p.pipeline = pipeline_from_string(j.at("pipeline").get<std::string>());
    p.lineage = j.value("lineage", "");
    if (j.contains("diversity_index")) p.diversity_index = j.at("diversity_index").get<int>();
    p.caption = j.value("caption", "");
    p.principle = j.value("principle", "");
    p.repairs = j.value("repairs", 0);
    if (j.contains("params")) p.params = j.at("params");
    p.image = read_file(out / j.at("image_path").get<std::string>());
    p.code = read_file(out / j.at("code_path").get<std::string>());
    return p;
}

struct Unit {
    std::vector<ImageCodePair> pairs;
    std::vector<Rejection> rejections;
};

}  // namespace

Engine::Engine(llm::Gateway& gateway, const sandbox::Sandbox& sandbox, EngineConfig config)
    : gateway_(gateway), sandbox_(sandbox), config_(config) {
    if (config_.k < 1) throw Error(ErrorKind::PreconditionViolation, "engine.k must be >= 1");
    if (config_.max_repairs < 0) throw Error(ErrorKind::PreconditionViolation, "engine.max_repairs must be >= 0");
}

ImageCodePair Engine::render_pair(ImageCodePair pair, const std::string& code, const char* what) {
    agent::RenderOutcome r =
        agent::render_with_repair(gateway_, sandbox_, code, config_.max_repairs, config_.timeout);
    if (!r.result.ok()) {
        throw Error(ErrorKind::RenderFailure, std::string(what) + " " + pair.id + ": " + r.result.failure_message());
    }
    pair.code = std::move(r.code);
    pair.image = r.result.primary_image();
    pair.repairs = r.repairs;
    return pair;
}

ImageCodePair Engine::reproduce(const SeedImage& seed) {
    ImageCodePair pair;
    pair.id = "ir-" + seed.id;
    pair.pipeline = Pipeline::IR;
    pair.lineage = seed.id;

    std::string code;
    try {
        pair.caption = gateway_.complete(llm::tasks::kCaption, gateway_.render("caption", {}), {seed.image}).text;
        const std::string reply =
            gateway_
                .complete(llm::tasks::kCodeGen, gateway_.render("img_cap2code", {{"description", pair.caption}}),
                          {seed.image})
                .text;
        code = sandbox::extract_code_block(reply);
    } catch (const Error& e) {
        throw Error(ErrorKind::GenerationFailure, pair.id + ": " + e.what());
    }
    return render_pair(std::move(pair), code, "reproduction");
}

DiversifyResult Engine::diversify(const SeedImage& seed, int k) {
    if (k < 1) throw Error(ErrorKind::PreconditionViolation, "k must be >= 1");
    DiversifyResult out;
    try {
        out.principle =
            gateway_.complete(llm::tasks::kPrinciple, gateway_.render("principle", {}), {seed.image}).text;
    } catch (const Error& e) {
        throw Error(ErrorKind::PrincipleFailure, seed.id + ": " + e.what());
    }
    if (trim(out.principle).empty()) throw Error(ErrorKind::PrincipleFailure, seed.id + ": empty principle");

    std::vector<std::string> blocks;
    std::string failure;
    try {
        const std::string prompt =
            gateway_.render("diversify", {{"principle", out.principle}, {"k", std::to_string(k)}});
        blocks = sandbox::extract_all_code_blocks(gateway_.complete(llm::tasks::kDiversify, prompt).text);
    } catch (const Error& e) {
        failure = e.what();
    }

    for (int i = 0; i < k; ++i) {
        ImageCodePair pair;
        pair.id = "id-" + seed.id + "-" + std::to_string(i + 1);
        pair.pipeline = Pipeline::ID;
        pair.lineage = seed.id;
        pair.diversity_index = i + 1;
        pair.principle = out.principle;
        auto reject = [&](std::string stage, std::string reason) {
            out.rejections.push_back({pair.id, seed.id, Pipeline::ID, i + 1, std::move(stage), std::move(reason)});
        };
        if (static_cast<std::size_t>(i) >= blocks.size()) {
            reject("generation", failure.empty() ? "variant missing from response" : failure);
            continue;
        }
        try {
            out.pairs.push_back(render_pair(pair, blocks[static_cast<std::size_t>(i)], "variant"));
        } catch (const Error& e) {
            reject("render", e.what());
        }
    }
    return out;
}

QualityReport Engine::quality_gate(const ImageCodePair& pair) {
    QualityReport r;
    r.q_code = judge(gateway_, llm::tasks::kJudgeCode, gateway_.render("q_code", {{"code", pair.code}}), {},
                     llm::VerdictFamily::CodeQuality);
    if (!r.q_code->positive()) return r;
    r.q_image = judge(gateway_, llm::tasks::kJudgeImage, gateway_.render("q_image", {}), {pair.image},
                      llm::VerdictFamily::ImageQuality);
    if (!r.q_image->positive()) return r;
    r.q_consistency = judge(gateway_, llm::tasks::kJudgeConsistency,
                            gateway_.render("q_consistency", {{"code", pair.code}}), {pair.image},
                            llm::VerdictFamily::Consistency);
    r.passed = r.q_consistency->positive();
    return r;
}

FilterResult Engine::filter(const std::vector<ImageCodePair>& pairs) {
    FilterResult out;
    out.reports.resize(pairs.size());
    std::vector<int> outcome(pairs.size(), 0);  // 1 passed, 2 rejected, 3 undecided
    parallel_for(pairs.size(), config_.workers, [&](std::size_t i) {
        try {
            out.reports[i] = quality_gate(pairs[i]);
            outcome[i] = out.reports[i].passed ? 1 : 2;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::JudgeUnavailable) throw;
            spdlog::warn("quality gate undecided for {}: {}", pairs[i].id, e.what());
            outcome[i] = 3;
        }
    });
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        auto& bucket = outcome[i] == 1 ? out.passed : outcome[i] == 2 ? out.rejected : out.undecided;
        bucket.push_back(pairs[i].id);
    }
    return out;
}

RunSummary Engine::run(const std::vector<SeedImage>& seeds, const fs::path& out_dir) {
    if (seeds.empty() && config_.sg_count == 0) {
        throw Error(ErrorKind::PreconditionViolation, "no seeds and no synthesized pairs requested");
    }
    fs::create_directories(out_dir / "images");
    fs::create_directories(out_dir / "codes");
    const fs::path journal = out_dir / "state.jsonl";

    std::map<std::string, json> state;
    if (fs::exists(journal)) {
        for (auto& rec : read_jsonl(journal)) {
            const std::string unit = rec.at("unit").get<std::string>();
            state[unit] = std::move(rec);
        }
    }
    std::mutex journal_mu;
    auto record = [&](json rec) {
        std::lock_guard lock(journal_mu);
        append_line(journal, rec.dump());
        const std::string unit = rec.at("unit").get<std::string>();
        state[unit] = std::move(rec);
    };

    RunSummary summary;
    summary.seeds = seeds.size();

    auto load_unit = [&](const std::string& name, Unit& unit) {
        std::lock_guard lock(journal_mu);
        auto it = state.find(name);
        if (it == state.end()) return false;
        for (const auto& p : it->second.at("pairs")) unit.pairs.push_back(restore_pair(out_dir, p));
        for (const auto& r : it->second.at("rejections")) unit.rejections.push_back(rejection_from_json(r));
        ++summary.resumed_units;
        return true;
    };
    auto save_unit = [&](const std::string& name, const Unit& unit) {
        json rec = {{"unit", name}, {"pairs", json::array()}, {"rejections", json::array()}};
        for (const auto& p : unit.pairs) rec["pairs"].push_back(store_pair(out_dir, p));
        for (const auto& r : unit.rejections) rec["rejections"].push_back(to_json(r));
        record(std::move(rec));
    };

    // Generation. Units are per seed and pipeline so a crash loses at most one.
    std::vector<Unit> ir(seeds.size());
    std::vector<Unit> id(seeds.size());
    parallel_for(seeds.size(), config_.workers, [&](std::size_t i) {
        const SeedImage& seed = seeds[i];
        if (config_.run_ir && !load_unit(unit_ir(seed.id), ir[i])) {
            try {
                ir[i].pairs.push_back(reproduce(seed));
            } catch (const Error& e) {
                const bool gen = e.kind() == ErrorKind::GenerationFailure;
                ir[i].rejections.push_back(
                    {"ir-" + seed.id, seed.id, Pipeline::IR, std::nullopt, gen ? "generation" : "render", e.what()});
            }
            save_unit(unit_ir(seed.id), ir[i]);
        }
        if (config_.run_id && !load_unit(unit_id(seed.id), id[i])) {
            try {
                DiversifyResult d = diversify(seed, config_.k);
                id[i].pairs = std::move(d.pairs);
                id[i].rejections = std::move(d.rejections);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::PrincipleFailure) throw;
                id[i].rejections.push_back(
                    {"id-" + seed.id, seed.id, Pipeline::ID, std::nullopt, "principle", e.what()});
            }
            save_unit(unit_id(seed.id), id[i]);
        }
    });

    Unit sg;
    if (config_.sg_count > 0 && !load_unit(std::string(kUnitSg), sg)) {
        geometry::BatchOptions opts;
        opts.count = config_.sg_count;
        opts.seed = config_.sg_seed;
        opts.workers = config_.workers;
        opts.timeout = config_.timeout;
        const geometry::BatchResult batch = geometry::synthesize_batch(sandbox_, opts);
        for (const auto& p : batch.pairs) {
            ImageCodePair pair;
            pair.id = p.id;
            pair.pipeline = Pipeline::SG;
            pair.lineage = p.template_id;
            pair.code = p.script;
            pair.image = p.image;
            pair.params = p.params;
            sg.pairs.push_back(std::move(pair));
        }
        for (const auto& f : batch.failures) {
            sg.rejections.push_back({f.id, f.template_id, Pipeline::SG, std::nullopt, "render", f.message});
        }
        save_unit(std::string(kUnitSg), sg);
    }

    // Deterministic order: per seed IR then ID variants, then SG.
    std::vector<ImageCodePair> candidates;
    std::vector<Rejection> rejections;
    auto take = [&](Unit& u) {
        for (auto& p : u.pairs) candidates.push_back(std::move(p));
        for (auto& r : u.rejections) rejections.push_back(std::move(r));
    };
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        take(ir[i]);
        take(id[i]);
    }
    take(sg);

    std::vector<ImageCodePair> unique;
    std::map<std::string, std::string> seen;
    for (auto& p : candidates) {
        const std::string fp = code_fingerprint(p.code);
        auto [it, inserted] = seen.emplace(fp, p.id);
        if (!inserted) {
            rejections.push_back({p.id, p.lineage, p.pipeline, p.diversity_index, "dedup", "duplicate of " + it->second});
            ++summary.duplicates;
            continue;
        }
        unique.push_back(std::move(p));
    }

    // Quality gate. Decided verdicts are journaled; undecided ones are retried
    // on the next run.
    std::vector<QualityReport> reports(unique.size());
    std::vector<int> outcome(unique.size(), 0);
    parallel_for(unique.size(), config_.workers, [&](std::size_t i) {
        const std::string name = unit_gate(unique[i].id);
        {
            std::lock_guard lock(journal_mu);
            auto it = state.find(name);
            if (it != state.end() && it->second.value("decided", false)) {
                reports[i] = quality_report_from_json(it->second.at("report"));
                outcome[i] = reports[i].passed ? 1 : 2;
                return;
            }
        }
        try {
            reports[i] = quality_gate(unique[i]);
            outcome[i] = reports[i].passed ? 1 : 2;
            record({{"unit", name}, {"decided", true}, {"report", to_json(reports[i])}});
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::JudgeUnavailable) throw;
            outcome[i] = 3;
            record({{"unit", name}, {"decided", false}, {"error", e.what()}});
        }
    });

    std::string manifest;
    for (std::size_t i = 0; i < unique.size(); ++i) {
        const ImageCodePair& p = unique[i];
        if (outcome[i] == 1) {
            json row = to_json(p, image_rel(p), code_rel(p));
            row["quality"] = to_json(reports[i]);
            manifest += row.dump() + "\n";
            switch (p.pipeline) {
                case Pipeline::IR: ++summary.ir; break;
                case Pipeline::ID: ++summary.id; break;
                case Pipeline::SG: ++summary.sg; break;
            }
            continue;
        }
        if (outcome[i] == 3) {
            ++summary.undecided;
            rejections.push_back({p.id, p.lineage, p.pipeline, p.diversity_index, "undecided", "judge unavailable"});
            continue;
        }
        const QualityReport& r = reports[i];
        const char* which = r.q_consistency ? "q_consistency" : r.q_image ? "q_image" : "q_code";
        const llm::JudgeVerdict& v = r.q_consistency ? *r.q_consistency : r.q_image ? *r.q_image : *r.q_code;
        rejections.push_back({p.id, p.lineage, p.pipeline, p.diversity_index, "quality",
                              std::string(which) + ": " + std::string(llm::to_string(v.kind))});
    }
    for (const auto& r : rejections) {
        if (r.stage != "undecided") ++summary.rejected;
    }

    std::string rejected;
    for (const auto& r : rejections) rejected += to_json(r).dump() + "\n";
    write_file(out_dir / "manifest.jsonl", manifest);
    write_file(out_dir / "rejections.jsonl", rejected);
    write_file(out_dir / "summary.json", to_json(summary).dump(2) + "\n");
    spdlog::info("engine run: {} IR, {} ID, {} SG kept; {} rejected, {} undecided, {} duplicates", summary.ir,
                 summary.id, summary.sg, summary.rejected, summary.undecided, summary.duplicates);
    return summary;
}

}  // namespace forge::engine
