#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "forge/common.hpp"
#include "forge/engine.hpp"
#include "forge/llm.hpp"
#include "forge/sandbox.hpp"

namespace forge::grounding {

// Trace text sent to the analyzer: at most `max_entries` records, one JSON
// object per line, followed by the per-kind histogram of the full trace.
std::string serialize_trace(const sandbox::TraceLog& trace, std::size_t max_entries = 500);

struct CodeAnalysis {
    std::string facts;
    bool degraded = false;  // the tracer was unavailable; the facts rest on the code alone
    std::size_t trace_entries = 0;
};

std::string draft_caption(llm::Gateway& gateway, const std::string& image);

// Executes `code` under the tracer and asks for a fact checklist. The image
// is never sent. Throws RenderFailure when the code does not run.
CodeAnalysis analyze_code(llm::Gateway& gateway, const sandbox::Sandbox& sandbox, const std::string& code,
                          sandbox::Millis timeout);

// Throws PreconditionViolation on an empty draft or empty facts.
std::string refine_caption(llm::Gateway& gateway, const std::string& draft, const std::string& facts);

struct ExplanatoryCode {
    std::string code;         // the program that rendered successfully
    std::string explanation;  // full walkthrough (empty on fallback)
    bool fallback = false;    // true when `code` is the original program
    std::string fallback_reason;
};

ExplanatoryCode explanatory_code(llm::Gateway& gateway, const sandbox::Sandbox& sandbox, const std::string& image,
                                 const std::string& code, sandbox::Millis timeout);

struct Triplet {
    std::string id;
    std::string image_path;  // relative to the dataset root
    std::string caption;
    std::string code;
    std::string explanation;
    engine::Pipeline pipeline = engine::Pipeline::IR;
    bool fallback = false;
    bool degraded = false;
};

json to_json(const Triplet& t);

Triplet build_triplet(llm::Gateway& gateway, const sandbox::Sandbox& sandbox, const engine::ImageCodePair& pair,
                      sandbox::Millis timeout);
// Throws PreconditionViolation unless the entry passed the quality gate.
Triplet build_triplet(llm::Gateway& gateway, const sandbox::Sandbox& sandbox, const engine::DatasetEntry& entry,
                      sandbox::Millis timeout);

struct GroundingSummary {
    std::size_t triplets = 0;
    std::size_t fallbacks = 0;
    std::size_t degraded = 0;
    std::size_t failed = 0;
};

json to_json(const GroundingSummary& s);

// Reads a dataset written by Engine::run and writes triplets.jsonl plus
// grounding_audit.jsonl (draft, facts and final caption per pair) to out_dir.
GroundingSummary run(llm::Gateway& gateway, const sandbox::Sandbox& sandbox, const std::filesystem::path& dataset_dir,
                     const std::filesystem::path& out_dir, sandbox::Millis timeout, std::size_t workers = 1);

}  // namespace forge::grounding
