#include "forge/grounding.hpp"

#include <mutex>

#include <spdlog/spdlog.h>

namespace forge::grounding {

namespace fs = std::filesystem;

std::string serialize_trace(const sandbox::TraceLog& trace, std::size_t max_entries) {
    std::string out;
    const std::size_t n = std::min(max_entries, trace.entries.size());
    for (std::size_t i = 0; i < n; ++i) {
        out += trace.entries[i].attributes.dump();
        out += '\n';
    }
    if (n < trace.entries.size()) {
        out += "... " + std::to_string(trace.entries.size() - n) + " more records omitted\n";
    }
    out += "histogram: " + json(trace.histogram()).dump() + "\n";
    return out;
}

std::string draft_caption(llm::Gateway& gateway, const std::string& image) {
    return gateway.complete(llm::tasks::kCaption, gateway.render("caption", {}), {image}).text;
}

CodeAnalysis analyze_code(llm::Gateway& gateway, const sandbox::Sandbox& sb, const std::string& code,
                          sandbox::Millis timeout) {
    sandbox::ExecutionRequest req;
    req.guest_script = code;
    req.timeout = timeout;
    req.trace_enabled = true;

    CodeAnalysis out;
    sandbox::ExecutionResult result;
    try {
        result = sb.trace_execute(req);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::TraceUnavailable) throw;
        req.trace_enabled = false;
        result = sb.execute(req);
        out.degraded = true;
    }
    if (!result.ok()) throw Error(ErrorKind::RenderFailure, result.failure_message());

    std::string trace_text = "(trace unavailable)";
    if (result.trace && !out.degraded) {
        trace_text = serialize_trace(*result.trace);
        out.trace_entries = result.trace->entries.size();
    } else {
        out.degraded = true;
    }
    out.facts = gateway.complete(llm::tasks::kAnalyze, gateway.render("analyze", {{"code", code}, {"trace", trace_text}}))
                    .text;
    return out;
}

std::string refine_caption(llm::Gateway& gateway, const std::string& draft, const std::string& facts) {
    if (trim(draft).empty()) throw Error(ErrorKind::PreconditionViolation, "draft caption is empty");
    if (trim(facts).empty()) throw Error(ErrorKind::PreconditionViolation, "fact checklist is empty");
    return gateway.complete(llm::tasks::kRefineCaption, gateway.render("refine_caption", {{"draft", draft}, {"facts", facts}}))
        .text;
}

ExplanatoryCode explanatory_code(llm::Gateway& gateway, const sandbox::Sandbox& sb, const std::string& image,
                                 const std::string& code, sandbox::Millis timeout) {
    ExplanatoryCode out;
    try {
        const std::string draft =
            gateway.complete(llm::tasks::kExplainDraft, gateway.render("code_from_image", {}), {image}).text;
        const std::string revised =
            gateway.complete(llm::tasks::kRefineCode, gateway.render("refine_code", {{"code", code}, {"draft", draft}}))
                .text;
        std::string program = sandbox::extract_code_block(revised);
        sandbox::ExecutionRequest req;
        req.guest_script = program;
        req.timeout = timeout;
        const sandbox::ExecutionResult r = sb.execute(req);
        if (r.ok()) {
            out.code = std::move(program);
            out.explanation = revised;
            return out;
        }
        out.fallback_reason = "revised code failed: " + r.failure_message();
    } catch (const Error& e) {
        out.fallback_reason = e.what();
    }
    out.code = code;
    out.fallback = true;
    return out;
}

json to_json(const Triplet& t) {
    json j = {{"id", t.id},
              {"image_path", t.image_path},
              {"caption", t.caption},
              {"code", t.code},
              {"pipeline", engine::to_string(t.pipeline)},
              {"fallback", t.fallback},
              {"degraded", t.degraded}};
    if (!t.explanation.empty()) j["explanation"] = t.explanation;
    return j;
}

json to_json(const GroundingSummary& s) {
    return {{"triplets", s.triplets}, {"fallbacks", s.fallbacks}, {"degraded", s.degraded}, {"failed", s.failed}};
}

namespace {

struct Grounded {
    Triplet triplet;
    json audit;
};

Grounded ground(llm::Gateway& gateway, const sandbox::Sandbox& sb, const engine::ImageCodePair& pair,
                sandbox::Millis timeout) {
    Grounded g;
    Triplet& t = g.triplet;
    t.id = pair.id;
    t.pipeline = pair.pipeline;
    const std::string draft = draft_caption(gateway, pair.image);
    const CodeAnalysis analysis = analyze_code(gateway, sb, pair.code, timeout);
    t.caption = refine_caption(gateway, draft, analysis.facts);
    t.degraded = analysis.degraded;
    ExplanatoryCode ec = explanatory_code(gateway, sb, pair.image, pair.code, timeout);
    t.code = std::move(ec.code);
    t.explanation = std::move(ec.explanation);
    t.fallback = ec.fallback;
    g.audit = {{"id", pair.id},
               {"draft", draft},
               {"facts", analysis.facts},
               {"caption", t.caption},
               {"trace_entries", analysis.trace_entries},
               {"degraded", analysis.degraded},
               {"fallback", ec.fallback}};
    if (ec.fallback) g.audit["fallback_reason"] = ec.fallback_reason;
    return g;
}

}  // namespace

Triplet build_triplet(llm::Gateway& gateway, const sandbox::Sandbox& sb, const engine::ImageCodePair& pair,
                      sandbox::Millis timeout) {
    return ground(gateway, sb, pair, timeout).triplet;
}

namespace {

void require_passed(const engine::DatasetEntry& entry) {
    if (!entry.quality.passed) {
        throw Error(ErrorKind::PreconditionViolation, entry.pair.id + " did not pass the quality gate");
    }
}

}  // namespace

Triplet build_triplet(llm::Gateway& gateway, const sandbox::Sandbox& sb, const engine::DatasetEntry& entry,
                      sandbox::Millis timeout) {
    require_passed(entry);
    Triplet t = ground(gateway, sb, entry.pair, timeout).triplet;
    t.image_path = entry.image_path;
    return t;
}

GroundingSummary run(llm::Gateway& gateway, const sandbox::Sandbox& sb, const fs::path& dataset_dir,
                     const fs::path& out_dir, sandbox::Millis timeout, std::size_t workers) {
    const std::vector<engine::DatasetEntry> entries = engine::load_dataset(dataset_dir);
    std::vector<std::optional<Grounded>> results(entries.size());
    std::vector<std::string> errors(entries.size());
    parallel_for(entries.size(), workers, [&](std::size_t i) {
        try {
            require_passed(entries[i]);
            Grounded g = ground(gateway, sb, entries[i].pair, timeout);
            g.triplet.image_path = entries[i].image_path;
            results[i] = std::move(g);
        } catch (const Error& e) {
            spdlog::warn("grounding failed for {}: {}", entries[i].pair.id, e.what());
            errors[i] = e.what();
        }
    });

    fs::create_directories(out_dir);
    GroundingSummary summary;
    std::string triplets;
    std::string audit;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (!results[i]) {
            ++summary.failed;
            audit += json({{"id", entries[i].pair.id}, {"error", errors[i]}}).dump() + "\n";
            continue;
        }
        const Triplet& t = results[i]->triplet;
        ++summary.triplets;
        summary.fallbacks += t.fallback;
        summary.degraded += t.degraded;
        triplets += to_json(t).dump() + "\n";
        audit += results[i]->audit.dump() + "\n";
    }
    write_file(out_dir / "triplets.jsonl", triplets);
    write_file(out_dir / "grounding_audit.jsonl", audit);
    return summary;
}

}  // namespace forge::grounding
