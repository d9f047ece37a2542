#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "forge/cli.hpp"
#include "forge/geometry.hpp"

namespace py = pybind11;
using forge::json;

namespace {

// JSON crosses the boundary as text; the Python package decodes it.
std::string dump(const json& j) { return j.dump(); }

json load(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw forge::Error(forge::ErrorKind::SchemaError, "invalid JSON argument");
    return j;
}

forge::llm::VerdictFamily family_of(const std::string& name) {
    if (name == "code") return forge::llm::VerdictFamily::CodeQuality;
    if (name == "image") return forge::llm::VerdictFamily::ImageQuality;
    if (name == "consistency") return forge::llm::VerdictFamily::Consistency;
    throw forge::Error(forge::ErrorKind::SchemaError, "family must be code, image or consistency");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "C++ core of cpforge";
    m.attr("__version__") = "0.1.0";

    py::register_exception<forge::Error>(m, "ForgeError");

    // llm
    m.def("parse_score", [](const std::string& text) { return forge::llm::parse_score(text); });
    m.def("parse_verdict", [](const std::string& text, const std::string& family) {
        return dump(forge::llm::to_json(forge::llm::parse_verdict(text, family_of(family))));
    });
    m.def("prompt_ids", [] { return forge::llm::PromptRegistry::builtin().ids(); });
    m.def("render_prompt", [](const std::string& id, const std::map<std::string, std::string>& slots) {
        forge::llm::Bindings b(slots.begin(), slots.end());
        return forge::llm::PromptRegistry::builtin().render(id, b);
    });
    m.def("default_routing", &forge::llm::default_routing);

    // sandbox
    m.def("extract_code_block", [](const std::string& text) { return forge::sandbox::extract_code_block(text); });
    m.def(
        "execute",
        [](const std::string& script, double timeout_s, bool trace) {
            static forge::sandbox::Sandbox sb;
            forge::sandbox::ExecutionRequest req;
            req.guest_script = script;
            req.timeout = forge::sandbox::Millis(static_cast<long long>(timeout_s * 1000));
            req.trace_enabled = trace;
            forge::sandbox::ExecutionResult r;
            {
                py::gil_scoped_release release;
                r = trace ? sb.trace_execute(req) : sb.execute(req);
            }
            json j = forge::sandbox::to_json(r);
            py::dict out;
            out["result"] = dump(j);
            out["image"] = r.ok() ? py::bytes(r.primary_image()) : py::bytes();
            return out;
        },
        py::arg("script"), py::arg("timeout_s") = 120.0, py::arg("trace") = false);

    // geometry
    m.def("mix_seed", &forge::geometry::mix_seed);
    m.def("splitmix64", [](std::uint64_t seed, std::size_t n) {
        forge::geometry::SplitMix64 rng(seed);
        std::vector<std::uint64_t> out(n);
        for (auto& v : out) v = rng.next();
        return out;
    });
    m.def("template_ids", [] {
        std::vector<std::string> ids;
        for (const auto& t : forge::geometry::TemplateRegistry::builtin().templates()) ids.push_back(t.id);
        return ids;
    });
    m.def("families", [] {
        std::vector<std::string> out;
        for (auto f : forge::geometry::TemplateRegistry::builtin().families()) {
            out.emplace_back(forge::geometry::to_string(f));
        }
        return out;
    });
    m.def("sample_parameters", [](const std::string& id, std::uint64_t seed) {
        return dump(forge::geometry::sample_parameters(forge::geometry::TemplateRegistry::builtin().get(id).space, seed));
    });
    m.def(
        "instantiate",
        [](const std::string& id, const std::string& params, std::optional<std::uint64_t> seed) {
            return forge::geometry::instantiate(id, load(params), seed);
        },
        py::arg("template_id"), py::arg("params_json"), py::arg("seed") = py::none());

    // reward
    m.def("format_reward", [](const std::string& text) { return forge::reward::format_reward(text); });
    m.def("combine", [](double f, double e, double c, double i) {
        return dump(forge::reward::to_json(forge::reward::combine(f, e, c, i)));
    });
    m.def(
        "group_advantages",
        [](const std::vector<double>& rewards, const std::string& std_kind) {
            return forge::reward::group_advantages(rewards, forge::reward::std_kind_from_string(std_kind));
        },
        py::arg("rewards"), py::arg("std") = "population");
    m.def(
        "difficulty_filter",
        [](const std::vector<std::pair<std::string, std::vector<bool>>>& groups, double lo, double hi) {
            std::vector<forge::reward::DifficultyGroup> gs;
            for (const auto& [id, flags] : groups) gs.push_back({id, flags});
            return forge::reward::difficulty_filter(gs, lo, hi);
        },
        py::arg("groups"), py::arg("lo") = 0.25, py::arg("hi") = 0.75);

    // eval
    m.def("exec_rate", [](const std::vector<std::string>& statuses) {
        std::vector<forge::eval::EvalRecord> records(statuses.size());
        for (std::size_t i = 0; i < statuses.size(); ++i) {
            records[i].exec.status = forge::sandbox::exec_status_from_string(statuses[i]);
        }
        return forge::eval::eval_exec_rate(records);
    });
    m.def("aggregate", [](const std::string& records_json, bool failed_exec_scores_zero) {
        std::vector<forge::eval::EvalRecord> records;
        for (const auto& r : load(records_json)) records.push_back(forge::eval::eval_record_from_json(r));
        forge::eval::EvalOptions o;
        o.failed_exec_scores_zero = failed_exec_scores_zero;
        return dump(forge::eval::to_json(forge::eval::aggregate(records, o)));
    });

    // bench
    m.def("rank_candidates", [](const std::string& candidates_json, std::size_t k) {
        std::vector<forge::bench::Candidate> cs;
        for (const auto& c : load(candidates_json)) {
            forge::bench::Candidate cand;
            cand.id = c.at("id").get<std::string>();
            cand.final_score = c.at("final_score").get<double>();
            cand.iterations_used = c.at("iterations_used").get<int>();
            cs.push_back(std::move(cand));
        }
        std::vector<std::string> ids;
        for (const auto& c : forge::bench::rank_candidates(std::move(cs), k)) ids.push_back(c.id);
        return ids;
    });
    m.def("ingest_annotations", [](const std::string& annotations_json) {
        std::vector<forge::bench::Annotation> anns;
        for (const auto& a : load(annotations_json)) anns.push_back(forge::bench::annotation_from_json(a));
        json out = json::object();
        for (const auto& [id, agg] : forge::bench::ingest_annotations(anns)) {
            out[id] = {{"mean", agg.mean}, {"annotators", agg.annotators}};
        }
        return dump(out);
    });

    // cli
    m.def("load_config", [](const std::string& path) { return dump(forge::cli::to_json(forge::cli::load_config(path))); });
}
