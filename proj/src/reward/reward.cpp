#include "forge/reward.hpp"

#include <cmath>

#include <spdlog/spdlog.h>

#include "forge/engine.hpp"
#include "forge/eval.hpp"

namespace forge::reward {

namespace fs = std::filesystem;

json to_json(const RewardBreakdown& b) {
    return {{"r_fmt", b.r_fmt},   {"r_exec", b.r_exec},           {"r_code", b.r_code},
            {"r_image", b.r_image}, {"r_total", b.r_total},       {"provisional", b.provisional},
            {"exec_status", b.exec_status}, {"notes", b.notes}};
}

RewardBreakdown combine(double r_fmt, double r_exec, double r_code, double r_image) {
    RewardBreakdown b;
    b.r_fmt = r_fmt;
    b.r_exec = r_exec;
    b.r_code = r_code;
    b.r_image = r_exec == 0.0 ? 0.0 : r_image;
    b.r_total = b.r_fmt + b.r_exec + b.r_code + b.r_image;
    return b;
}

int format_reward(std::string_view response) {
    try {
        sandbox::extract_code_block(response);
        return 1;
    } catch (const Error&) {
        return 0;
    }
}

RewardService::RewardService(llm::Gateway& gateway, const sandbox::Sandbox& sandbox, RewardOptions options)
    : gateway_(gateway), sandbox_(sandbox), options_(options) {
    if (options_.judge_attempts < 1) throw Error(ErrorKind::PreconditionViolation, "judge_attempts must be >= 1");
}

std::size_t RewardService::cache_size() const {
    std::lock_guard lock(mu_);
    return cache_.size();
}

std::optional<double> RewardService::judge(std::string_view task, const std::string& prompt,
                                           std::vector<std::string> images, std::vector<std::string>& notes) {
    for (int attempt = 1; attempt <= options_.judge_attempts; ++attempt) {
        try {
            return llm::parse_score(gateway_.complete(task, prompt, images).text) / options_.score_scale;
        } catch (const Error& e) {
            spdlog::warn("{} judge attempt {} failed: {}", task, attempt, e.what());
            if (attempt == options_.judge_attempts) notes.push_back(std::string(task) + ": " + e.what());
        }
    }
    return std::nullopt;
}

RewardBreakdown RewardService::content_reward(const std::string& response, const std::string& reference_code,
                                              const std::string& reference_image) {
    const std::string key =
        sha256_hex(sha256_hex(response) + sha256_hex(reference_code) + sha256_hex(reference_image));
    {
        std::lock_guard lock(mu_);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
    }
    ++computed_;

    std::string code;
    try {
        code = sandbox::extract_code_block(response);
    } catch (const Error&) {
        RewardBreakdown b = combine(0, 0, 0, 0);
        b.exec_status = "not_run";
        b.notes.push_back("no python code block");
        std::lock_guard lock(mu_);
        cache_.emplace(key, b);
        return b;
    }

    sandbox::ExecutionRequest req;
    req.guest_script = code;
    req.timeout = options_.timeout;
    const sandbox::ExecutionResult exec = sandbox_.execute(req);

    std::vector<std::string> notes;
    bool provisional = false;
    const std::string code_prompt =
        gateway_.render("code_score", {{"reference_code", reference_code}, {"generated_code", code}});
    const std::optional<double> r_code = judge(llm::tasks::kRewardCode, code_prompt, {}, notes);
    provisional |= !r_code;

    std::optional<double> r_image = 0.0;
    if (exec.ok()) {
        r_image = judge(llm::tasks::kRewardImage, gateway_.render("img_score", {}),
                        {reference_image, exec.primary_image()}, notes);
        provisional |= !r_image;
    }

    RewardBreakdown b = combine(1.0, exec.ok() ? 1.0 : 0.0, r_code.value_or(0.0), r_image.value_or(0.0));
    b.exec_status = std::string(sandbox::to_string(exec.status));
    b.provisional = provisional;
    b.notes = std::move(notes);
    if (!exec.ok()) b.notes.push_back("exec: " + exec.failure_message());
    if (!b.provisional) {
        std::lock_guard lock(mu_);
        cache_.emplace(key, b);
    }
    return b;
}

std::string_view to_string(StdKind k) { return k == StdKind::Population ? "population" : "sample"; }

StdKind std_kind_from_string(std::string_view name) {
    if (name == "population") return StdKind::Population;
    if (name == "sample") return StdKind::Sample;
    throw Error(ErrorKind::SchemaError, "std must be population or sample, got " + std::string(name));
}

std::vector<double> group_advantages(const std::vector<double>& rewards, StdKind std_kind) {
    if (rewards.empty()) throw Error(ErrorKind::EmptyGroup, "reward group is empty");
    const double n = static_cast<double>(rewards.size());
    if (std_kind == StdKind::Sample && rewards.size() == 1) return {0.0};
    double mean = 0;
    for (double r : rewards) mean += r;
    mean /= n;
    double var = 0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    const double sd = std::sqrt(var / (std_kind == StdKind::Sample ? n - 1 : n));
    std::vector<double> out(rewards.size(), 0.0);
    if (!(sd >= 1e-12)) return out;
    for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) / sd;
    return out;
}

std::vector<std::string> difficulty_filter(const std::vector<DifficultyGroup>& groups, double lo, double hi) {
    std::vector<std::string> kept;
    for (const auto& g : groups) {
        if (g.successes.empty()) continue;
        const double n = static_cast<double>(g.successes.size());
        const double s = static_cast<double>(std::count(g.successes.begin(), g.successes.end(), true));
        // Compared as s against bound*G so quarter bounds stay exact.
        if (s >= lo * n && s <= hi * n) kept.push_back(g.query_id);
    }
    return kept;
}

ReferenceStore ReferenceStore::load(const fs::path& dir) {
    ReferenceStore store;
    if (fs::exists(dir / "manifest.json")) {
        for (auto& s : eval::load_bench(dir).samples) store.add(s.id, {std::move(s.reference_code), std::move(s.image)});
    } else if (fs::exists(dir / "manifest.jsonl")) {
        for (auto& e : engine::load_dataset(dir)) store.add(e.pair.id, {std::move(e.pair.code), std::move(e.pair.image)});
    } else {
        throw Error(ErrorKind::Io, "no benchmark or dataset manifest in " + dir.string());
    }
    return store;
}

void ReferenceStore::add(std::string id, Reference ref) {
    if (!refs_.emplace(id, std::move(ref)).second) throw Error(ErrorKind::SchemaError, "duplicate sample " + id);
}

const Reference& ReferenceStore::get(std::string_view id) const {
    auto it = refs_.find(id);
    if (it == refs_.end()) throw Error(ErrorKind::UnknownSample, std::string(id));
    return it->second;
}

}  // namespace forge::reward
