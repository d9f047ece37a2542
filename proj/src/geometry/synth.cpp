#include <mutex>

#include <spdlog/spdlog.h>

#include "forge/geometry.hpp"

namespace forge::geometry {

namespace {

std::string sample_id(std::size_t index, std::string_view template_id) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "sg-%06zu-", index);
    return buf + std::string(template_id);
}

std::string extension_of(const std::string& name) {
    const auto dot = name.rfind('.');
    return dot == std::string::npos ? ".png" : name.substr(dot);
}

}  // namespace

BatchResult synthesize_batch(const sandbox::Sandbox& sb, const BatchOptions& options, const TemplateRegistry& registry) {
    if (registry.empty()) throw Error(ErrorKind::NoTemplates, "no geometry templates registered");
    if (options.count == 0) throw Error(ErrorKind::PreconditionViolation, "count must be >= 1");

    const auto& templates = registry.templates();
    std::vector<std::optional<SynthPair>> pairs(options.count);
    std::vector<std::optional<SynthFailure>> failures(options.count);

    parallel_for(options.count, options.workers, [&](std::size_t i) {
        const GeometryTemplate& t = templates[i % templates.size()];
        const std::uint64_t seed = mix_seed(options.seed, i);
        const json params = sample_parameters(t.space, seed);
        const std::string script = t.emit(params, seed);
        const std::string id = sample_id(i, t.id);

        sandbox::ExecutionRequest req;
        req.guest_script = script;
        req.timeout = options.timeout;
        req.env_manifest_id = options.env_manifest_id;
        const auto result = sb.execute(req);
        if (!result.ok()) {
            spdlog::warn("{}: render failed ({})", id, sandbox::to_string(result.status));
            failures[i] = SynthFailure{id, t.id, i, seed, result.status, result.failure_message()};
            return;
        }
        SynthPair p;
        p.id = id;
        p.template_id = t.id;
        p.family = t.family;
        p.index = i;
        p.seed = seed;
        p.params = params;
        p.script = script;
        p.image = result.primary_image();
        p.image_name = id + extension_of(result.artifacts.front().name);
        pairs[i] = std::move(p);
    });

    BatchResult out;
    for (auto& p : pairs) {
        if (p) out.pairs.push_back(std::move(*p));
    }
    for (auto& f : failures) {
        if (f) out.failures.push_back(std::move(*f));
    }
    return out;
}

json to_json(const SynthPair& p) {
    return {{"id", p.id},
            {"pipeline", "SG"},
            {"template_id", p.template_id},
            {"family", to_string(p.family)},
            {"index", p.index},
            {"seed", p.seed},
            {"params", p.params},
            {"code_path", "scripts/" + p.id + ".py"},
            {"image_path", "images/" + p.image_name},
            {"code_sha256", sha256_hex(p.script)},
            {"image_sha256", sha256_hex(p.image)}};
}

json to_json(const SynthFailure& f) {
    return {{"id", f.id},
            {"template_id", f.template_id},
            {"index", f.index},
            {"seed", f.seed},
            {"status", sandbox::to_string(f.status)},
            {"message", f.message}};
}

void write_batch(const BatchResult& batch, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir / "scripts");
    std::filesystem::create_directories(out_dir / "images");
    std::string manifest;
    for (const auto& p : batch.pairs) {
        write_file(out_dir / "scripts" / (p.id + ".py"), p.script);
        write_file(out_dir / "images" / p.image_name, p.image);
        manifest += to_json(p).dump() + "\n";
    }
    std::string failures;
    for (const auto& f : batch.failures) failures += to_json(f).dump() + "\n";
    write_file(out_dir / "manifest.jsonl", manifest);
    write_file(out_dir / "failures.jsonl", failures);
}

}  // namespace forge::geometry
