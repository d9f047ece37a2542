#include <cctype>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "forge/geometry.hpp"
#include "forge/resources.hpp"

namespace forge::geometry {

namespace {

constexpr std::string_view kTemplateTag = "# forge-template: ";
constexpr std::string_view kParamsTag = "# forge-params: ";
constexpr std::string_view kSeedTag = "# forge-seed: ";

std::string format_real(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

// Python literal for one parameter value, plus the canonical JSON value.
std::pair<std::string, json> literal(const Dimension& d, const json& v) {
    return std::visit(
        [&](const auto& dom) -> std::pair<std::string, json> {
            using T = std::decay_t<decltype(dom)>;
            if constexpr (std::is_same_v<T, IntRange>) {
                return {std::to_string(v.get<std::int64_t>()), v.get<std::int64_t>()};
            } else if constexpr (std::is_same_v<T, RealInterval>) {
                const std::string text = format_real(v.get<double>(), dom.decimals);
                return {text, std::stod(text)};
            } else {
                // A JSON string literal is also a valid Python string literal.
                return {json(v.get<std::string>()).dump(), v.get<std::string>()};
            }
        },
        d.domain);
}

}  // namespace

std::string_view to_string(Family f) {
    switch (f) {
        case Family::CubeNet: return "cube_net";
        case Family::ThreeView: return "three_view";
        case Family::CrossSection: return "cross_section";
        case Family::CubeStacking: return "cube_stacking";
        case Family::GeometryCombination: return "geometry_combination";
        case Family::Polyhedron: return "polyhedron";
        case Family::SpatialCurve: return "spatial_curve";
        case Family::SurfaceIntegral: return "surface_integral";
    }
    return "unknown";
}

const std::vector<Family>& all_families() {
    static const std::vector<Family> families = {
        Family::CubeNet,      Family::ThreeView,           Family::CrossSection, Family::CubeStacking,
        Family::GeometryCombination, Family::Polyhedron, Family::SpatialCurve, Family::SurfaceIntegral,
    };
    return families;
}

Family family_from_string(std::string_view name) {
    for (Family f : all_families()) {
        if (to_string(f) == name) return f;
    }
    throw Error(ErrorKind::SchemaError, "unknown template family " + std::string(name));
}

std::string GeometryTemplate::emit(const json& params, std::optional<std::uint64_t> seed) const {
    check_parameters(space, params);
    std::map<std::string, std::string, std::less<>> values;
    json canonical = json::object();
    for (const auto& d : space.dimensions) {
        auto [text, value] = literal(d, params.at(d.name));
        values[d.name] = std::move(text);
        canonical[d.name] = std::move(value);
    }

    std::string out;
    out.reserve(body.size() + 256);
    out += kTemplateTag;
    out += id;
    out += '\n';
    out += kParamsTag;
    out += canonical.dump();
    out += '\n';
    out += kSeedTag;
    out += seed ? std::to_string(*seed) : "none";
    out += '\n';

    std::size_t pos = 0;
    while (pos < body.size()) {
        const std::size_t open = body.find("{{", pos);
        if (open == std::string::npos) break;
        const std::size_t close = body.find("}}", open + 2);
        if (close == std::string::npos) break;
        auto it = values.find(std::string_view(body).substr(open + 2, close - open - 2));
        if (it == values.end()) {
            out.append(body, pos, open + 2 - pos);
            pos = open + 2;
            continue;
        }
        out.append(body, pos, open - pos);
        out += it->second;
        pos = close + 2;
    }
    out.append(body, pos, std::string::npos);
    return out;
}

const TemplateRegistry& TemplateRegistry::builtin() {
    static const TemplateRegistry registry = [] {
        TemplateRegistry r;
        const json catalog = json::parse(resources::get("templates/catalog.json"));
        for (const auto& entry : catalog.at("templates")) {
            GeometryTemplate t;
            t.id = entry.at("id").get<std::string>();
            t.family = family_from_string(entry.at("family").get<std::string>());
            t.description = entry.value("description", "");
            t.space = parameter_space_from_json(entry.at("parameters"));
            t.body = std::string(resources::get("templates/" + t.id + ".py"));
            r.add(std::move(t));
        }
        return r;
    }();
    return registry;
}

void TemplateRegistry::add(GeometryTemplate t) {
    t.space.validate();
    for (const auto& existing : templates_) {
        if (existing.id == t.id) throw Error(ErrorKind::SchemaError, "duplicate template " + t.id);
    }
    for (const auto& d : t.space.dimensions) {
        if (t.body.find("{{" + d.name + "}}") == std::string::npos) {
            throw Error(ErrorKind::SchemaError, t.id + ": parameter " + d.name + " is never used");
        }
    }
    templates_.push_back(std::move(t));
}

const GeometryTemplate& TemplateRegistry::get(std::string_view id) const {
    for (const auto& t : templates_) {
        if (t.id == id) return t;
    }
    throw Error(ErrorKind::UnknownTemplate, std::string(id));
}

std::vector<Family> TemplateRegistry::families() const {
    std::vector<Family> out;
    for (Family f : all_families()) {
        for (const auto& t : templates_) {
            if (t.family == f) {
                out.push_back(f);
                break;
            }
        }
    }
    return out;
}

std::string TemplateRegistry::catalog_markdown() const {
    std::ostringstream md;
    md << "# Geometry template catalog\n\n";
    md << "Generated by `forge geo catalog`. Each template is a matplotlib script with `{{name}}` slots.\n";
    for (Family f : families()) {
        md << "\n## " << to_string(f) << "\n";
        for (const auto& t : templates_) {
            if (t.family != f) continue;
            md << "\n### `" << t.id << "`\n\n" << t.description << "\n\n";
            md << "| parameter | domain |\n|---|---|\n";
            for (const auto& d : t.space.dimensions) {
                md << "| `" << d.name << "` | ";
                std::visit(
                    [&](const auto& dom) {
                        using T = std::decay_t<decltype(dom)>;
                        if constexpr (std::is_same_v<T, IntRange>) {
                            md << "integer " << dom.lo << " .. " << dom.hi;
                        } else if constexpr (std::is_same_v<T, RealInterval>) {
                            md << "real " << format_real(dom.lo, dom.decimals) << " .. "
                               << format_real(dom.hi, dom.decimals) << " (step 1e-" << dom.decimals << ")";
                        } else {
                            md << "one of ";
                            for (std::size_t i = 0; i < dom.values.size(); ++i) {
                                md << (i ? ", " : "") << "`" << dom.values[i] << "`";
                            }
                        }
                    },
                    d.domain);
                md << " |\n";
            }
        }
    }
    return md.str();
}

std::string instantiate(std::string_view template_id, const json& params, std::optional<std::uint64_t> seed,
                        const TemplateRegistry& registry) {
    return registry.get(template_id).emit(params, seed);
}

Provenance parse_header(std::string_view script) {
    Provenance p;
    bool have_id = false;
    bool have_params = false;
    for (const auto& line : split_lines(script.substr(0, 64 * 1024))) {
        std::string_view l = line;
        if (l.substr(0, kTemplateTag.size()) == kTemplateTag) {
            p.template_id = trim(l.substr(kTemplateTag.size()));
            have_id = true;
        } else if (l.substr(0, kParamsTag.size()) == kParamsTag) {
            p.params = json::parse(l.substr(kParamsTag.size()), nullptr, false);
            have_params = !p.params.is_discarded();
        } else if (l.substr(0, kSeedTag.size()) == kSeedTag) {
            const std::string v = trim(l.substr(kSeedTag.size()));
            if (v != "none") {
                try {
                    p.seed = std::stoull(v);
                } catch (const std::exception&) {
                    throw Error(ErrorKind::ParseFailure, "bad forge-seed line: " + v);
                }
            }
        } else if (!l.empty() && l[0] != '#') {
            break;
        }
    }
    if (!have_id || !have_params) throw Error(ErrorKind::ParseFailure, "script has no forge provenance header");
    return p;
}

}  // namespace forge::geometry
