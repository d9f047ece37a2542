#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "forge/common.hpp"
#include "forge/sandbox.hpp"

namespace forge::geometry {

// SplitMix64 (Steele, Lea, Flood 2014). Fixed algorithm so samples match
// across platforms and standard libraries.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next();
    // Uniform in [lo, hi], rejection-sampled to avoid modulo bias.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

private:
    std::uint64_t state_;
};

std::uint64_t mix_seed(std::uint64_t batch_seed, std::uint64_t index);

struct IntRange {
    std::int64_t lo = 0;
    std::int64_t hi = 0;
};

// Values are multiples of 10^-decimals inside [lo, hi].
struct RealInterval {
    double lo = 0.0;
    double hi = 0.0;
    int decimals = 2;
};

struct EnumSet {
    std::vector<std::string> values;
};

using Domain = std::variant<IntRange, RealInterval, EnumSet>;

struct Dimension {
    std::string name;
    Domain domain;
};

struct ParameterSpace {
    std::vector<Dimension> dimensions;

    // Throws SchemaError on an empty domain or duplicate name.
    void validate() const;
    const Dimension* find(std::string_view name) const;
};

ParameterSpace parameter_space_from_json(const json& j);
json to_json(const ParameterSpace& space);

// Sampled parameters are a JSON object (name -> integer, number or string);
// its key order is canonical, so dump() is a stable serialization.
json sample_parameters(const ParameterSpace& space, std::uint64_t seed);
// Throws ParameterOutOfDomain naming the first offending dimension.
void check_parameters(const ParameterSpace& space, const json& params);
// All-low and all-high samples (enums take their first and last values).
std::vector<json> corner_samples(const ParameterSpace& space);

enum class Family {
    CubeNet,
    ThreeView,
    CrossSection,
    CubeStacking,
    GeometryCombination,
    Polyhedron,
    SpatialCurve,
    SurfaceIntegral,
};

std::string_view to_string(Family f);
Family family_from_string(std::string_view name);
const std::vector<Family>& all_families();

struct GeometryTemplate {
    std::string id;
    Family family = Family::CubeNet;
    std::string description;
    ParameterSpace space;
    std::string body;  // guest script with {{name}} placeholders

    // Deterministic: same params (and seed) give byte-identical scripts.
    std::string emit(const json& params, std::optional<std::uint64_t> seed = std::nullopt) const;
};

class TemplateRegistry {
public:
    // Templates under resources/templates, in catalog order.
    static const TemplateRegistry& builtin();

    void add(GeometryTemplate t);
    const GeometryTemplate& get(std::string_view id) const;
    const std::vector<GeometryTemplate>& templates() const { return templates_; }
    bool empty() const { return templates_.empty(); }
    std::vector<Family> families() const;

    // Markdown catalog of every template and its parameter space.
    std::string catalog_markdown() const;

private:
    std::vector<GeometryTemplate> templates_;
};

// Throws UnknownTemplate or ParameterOutOfDomain.
std::string instantiate(std::string_view template_id, const json& params,
                        std::optional<std::uint64_t> seed = std::nullopt,
                        const TemplateRegistry& registry = TemplateRegistry::builtin());

struct Provenance {
    std::string template_id;
    json params;
    std::optional<std::uint64_t> seed;
};

// Reads the "# forge-*" header back. Throws ParseFailure when absent.
Provenance parse_header(std::string_view script);

struct SynthPair {
    std::string id;
    std::string template_id;
    Family family = Family::CubeNet;
    std::size_t index = 0;
    std::uint64_t seed = 0;
    json params;
    std::string script;
    std::string image;  // rendered bytes
    std::string image_name;
};

struct SynthFailure {
    std::string id;
    std::string template_id;
    std::size_t index = 0;
    std::uint64_t seed = 0;
    sandbox::ExecStatus status = sandbox::ExecStatus::LaunchFailure;
    std::string message;
};

struct BatchOptions {
    std::size_t count = 0;
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    sandbox::Millis timeout{std::chrono::seconds(120)};
    std::string env_manifest_id = "default";
};

struct BatchResult {
    std::vector<SynthPair> pairs;        // in index order
    std::vector<SynthFailure> failures;  // in index order
};

// Sample i uses template i mod |templates| and seed mix_seed(seed, i).
// Throws NoTemplates for an empty registry, PreconditionViolation for count 0.
BatchResult synthesize_batch(const sandbox::Sandbox& sandbox, const BatchOptions& options,
                             const TemplateRegistry& registry = TemplateRegistry::builtin());

json to_json(const SynthPair& p);
json to_json(const SynthFailure& f);

// Writes scripts/, images/, manifest.jsonl and failures.jsonl under out_dir.
void write_batch(const BatchResult& batch, const std::filesystem::path& out_dir);

}  // namespace forge::geometry
