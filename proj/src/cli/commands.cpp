#include <csignal>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "forge/cli.hpp"
#include "forge/geometry.hpp"
#include "forge/grounding.hpp"

namespace forge::cli {

namespace fs = std::filesystem;

namespace {

std::function<void()> g_stop;

extern "C" void on_signal(int) {
    if (g_stop) g_stop();
}

void serve_until_signal(std::function<void()> stop) {
    g_stop = std::move(stop);
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
}

void emit(const json& j) { std::cout << j.dump(2) << std::endl; }

struct Globals {
    std::string config_path;
    bool mock = false;
    std::string log_level;
};

RunConfig resolve(const Globals& g) {
    RunConfig c;
    if (!g.config_path.empty()) {
        c = load_config(g.config_path);
    } else if (const char* env = std::getenv("FORGE_CONFIG"); env && *env) {
        c = load_config(env);
    }
    if (g.mock) c.mock_mode = true;
    if (!g.log_level.empty()) c.log_level = g.log_level;
    spdlog::set_level(spdlog::level::from_str(c.log_level));
    return c;
}

json parse_set(const std::vector<std::string>& items, llm::Bindings& out) {
    for (const auto& item : items) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw CLI::ValidationError("--set", "expected name=value, got " + item);
        out[item.substr(0, eq)] = item.substr(eq + 1);
    }
    return json(nullptr);
}

}  // namespace

int run(int argc, char** argv) {
    auto logger = spdlog::get("forge");
    if (!logger) logger = spdlog::stderr_color_mt("forge");
    spdlog::set_default_logger(logger);

    CLI::App app{"forge: STEM image-code data, evaluation and reward tooling"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config_path, "JSON run configuration");
    app.add_flag("--mock", g.mock, "Serve every model call from the mock script; no network");
    app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error");

    std::function<void()> action;

    // exec
    auto* exec = app.add_subcommand("exec", "Run one guest script in the sandbox");
    std::string exec_script;
    std::string exec_artifacts;
    double exec_timeout = 0;
    bool exec_trace = false;
    exec->add_option("script", exec_script, "Python file")->required()->check(CLI::ExistingFile);
    exec->add_option("--timeout", exec_timeout, "Seconds; defaults to sandbox.timeout_s");
    exec->add_flag("--trace", exec_trace, "Attach the drawing tracer");
    exec->add_option("--artifacts", exec_artifacts, "Directory to copy produced files into");
    exec->callback([&] {
        action = [&] {
            const RunConfig c = resolve(g);
            auto sb = make_sandbox(c);
            sandbox::ExecutionRequest req;
            req.guest_script = read_file(exec_script);
            req.timeout = exec_timeout > 0 ? sandbox::Millis(static_cast<long long>(exec_timeout * 1000)) : timeout_of(c);
            req.trace_enabled = exec_trace;
            const auto r = exec_trace ? sb->trace_execute(req) : sb->execute(req);
            if (!exec_artifacts.empty()) {
                for (const auto& a : r.artifacts) write_file(fs::path(exec_artifacts) / a.name, a.bytes);
            }
            emit(to_json(r));
        };
    });

    // geo
    auto* geo = app.add_subcommand("geo", "Parametric geometry synthesis");
    geo->require_subcommand(1);
    auto* synth = geo->add_subcommand("synth", "Render a batch of template instances");
    std::size_t synth_count = 0;
    std::uint64_t synth_seed = 0;
    std::string synth_out;
    synth->add_option("--count", synth_count)->required()->check(CLI::PositiveNumber);
    synth->add_option("--seed", synth_seed);
    synth->add_option("--out", synth_out)->required();
    synth->callback([&] {
        action = [&] {
            const RunConfig c = resolve(g);
            auto sb = make_sandbox(c);
            geometry::BatchOptions o;
            o.count = synth_count;
            o.seed = synth_seed;
            o.workers = c.engine.workers;
            o.timeout = timeout_of(c);
            const auto batch = geometry::synthesize_batch(*sb, o);
            geometry::write_batch(batch, synth_out);
            emit({{"rendered", batch.pairs.size()}, {"failed", batch.failures.size()}, {"out", synth_out}});
        };
    });
    auto* catalog = geo->add_subcommand("catalog", "Print the template catalog");
    bool catalog_md = false;
    catalog->add_flag("--markdown", catalog_md, "Markdown instead of JSON");
    catalog->callback([&] {
        action = [&] {
            resolve(g);
            const auto& reg = geometry::TemplateRegistry::builtin();
            if (catalog_md) {
                std::cout << reg.catalog_markdown();
                return;
            }
            json out = json::array();
            for (const auto& t : reg.templates()) {
                out.push_back({{"id", t.id},
                               {"family", geometry::to_string(t.family)},
                               {"description", t.description},
                               {"parameters", geometry::to_json(t.space)}});
            }
            emit(out);
        };
    });
    auto* inst = geo->add_subcommand("instantiate", "Print one template instance");
    std::string inst_template;
    std::string inst_params;
    std::uint64_t inst_seed = 0;
    bool inst_has_seed = false;
    inst->add_option("template", inst_template)->required();
    inst->add_option("--params", inst_params, "JSON object; sampled from --seed when omitted");
    inst->add_option("--seed", inst_seed)->each([&](const std::string&) { inst_has_seed = true; });
    inst->callback([&] {
        action = [&] {
            resolve(g);
            const auto& t = geometry::TemplateRegistry::builtin().get(inst_template);
            json params;
            if (!inst_params.empty()) {
                params = json::parse(inst_params, nullptr, false);
                if (params.is_discarded()) throw Error(ErrorKind::SchemaError, "--params is not valid JSON");
            } else {
                params = geometry::sample_parameters(t.space, inst_seed);
                inst_has_seed = true;
            }
            std::cout << t.emit(params, inst_has_seed ? std::optional(inst_seed) : std::nullopt);
        };
    });

    // engine
    auto* eng = app.add_subcommand("engine", "Image-code data engine");
    eng->require_subcommand(1);
    auto* eng_run = eng->add_subcommand("run", "Reproduce, diversify, synthesize and filter");
    std::string eng_seeds;
    std::string eng_out;
    std::optional<int> eng_k;
    std::optional<std::size_t> eng_sg_count;
    std::optional<std::uint64_t> eng_sg_seed;
    eng_run->add_option("--seeds", eng_seeds, "Seed image directory; omit for an SG-only run");
    eng_run->add_option("--out", eng_out)->required();
    eng_run->add_option("--k", eng_k, "Variants per seed (overrides engine.k)");
    eng_run->add_option("--sg-count", eng_sg_count, "Template-synthesized pairs (overrides engine.sg_count)");
    eng_run->add_option("--sg-seed", eng_sg_seed, "Batch seed for synthesis (overrides engine.sg_seed)");
    eng_run->callback([&] {
        action = [&] {
            const RunConfig c = resolve(g);
            auto sb = make_sandbox(c);
            auto gw = make_gateway(c);
            engine::EngineConfig ec = engine_config(c);
            if (eng_k) ec.k = *eng_k;
            if (eng_sg_count) ec.sg_count = *eng_sg_count;
            if (eng_sg_seed) ec.sg_seed = *eng_sg_seed;
            engine::Engine e(*gw, *sb, ec);
            std::vector<engine::SeedImage> seeds;
            if (!eng_seeds.empty()) seeds = engine::load_seeds(eng_seeds);
            emit(to_json(e.run(seeds, eng_out)));
        };
    });

    // ground
    auto* ground = app.add_subcommand("ground", "Build code-grounded caption triplets from a dataset");
    std::string ground_dataset;
    std::string ground_out;
    ground->add_option("--dataset", ground_dataset)->required();
    ground->add_option("--out", ground_out)->required();
    ground->callback([&] {
        action = [&] {
            const RunConfig c = resolve(g);
            auto sb = make_sandbox(c);
            auto gw = make_gateway(c);
            emit(to_json(grounding::run(*gw, *sb, ground_dataset, ground_out, timeout_of(c), c.grounding.workers)));
        };
    });

    // agent
    auto* agent_cmd = app.add_subcommand("agent", "Iterative render-judge-refine agent");
    agent_cmd->require_subcommand(1);
    auto* refine = agent_cmd->add_subcommand("refine", "Refine a single pair or every pair of a dataset");
    std::string ag_image;
    std::string ag_code;
    std::string ag_dataset;
    std::string ag_out;
    refine->add_option("--image", ag_image)->check(CLI::ExistingFile);
    refine->add_option("--code", ag_code)->check(CLI::ExistingFile);
    refine->add_option("--dataset", ag_dataset, "Engine dataset; writes a bench candidate directory to --out");
    refine->add_option("--out", ag_out);
    refine->callback([&] {
        const bool single = !ag_image.empty() && !ag_code.empty();
        if (single == !ag_dataset.empty()) throw CLI::ValidationError("agent refine", "give --image and --code, or --dataset");
        if (!ag_dataset.empty() && ag_out.empty()) throw CLI::ValidationError("agent refine", "--dataset needs --out");
        action = [&, single] {
            const RunConfig c = resolve(g);
            auto sb = make_sandbox(c);
            auto gw = make_gateway(c);
            const agent::AgentConfig ac = agent_config(c);
            if (single) {
                const auto state = agent::refine_loop(*gw, *sb, read_file(ag_image), read_file(ag_code), ac);
                if (!ag_out.empty() && state.best_code) write_file(ag_out, *state.best_code);
                emit(to_json(state));
                return;
            }
            std::vector<bench::Candidate> candidates;
            json statuses = json::object();
            for (const auto& e : engine::load_dataset(ag_dataset)) {
                const auto state = agent::refine_loop(*gw, *sb, e.pair.image, e.pair.code, ac);
                statuses[e.pair.id] = to_string(state.status);
                write_file(fs::path(ag_out) / "transcripts" / (e.pair.id + ".json"), to_json(state).dump(2));
                if (!state.best_code) continue;
                bench::Candidate cand;
                cand.id = e.pair.id;
                cand.image = e.pair.image;
                cand.rendered = state.best_image;
                cand.code = *state.best_code;
                cand.final_score = state.best_score.value_or(0.0);
                cand.iterations_used = state.iteration;
                cand.transcript_path = "transcripts/" + e.pair.id + ".json";
                candidates.push_back(std::move(cand));
            }
            bench::write_candidates(candidates, ag_out);
            emit({{"candidates", candidates.size()}, {"status", statuses}});
        };
    });

    // eval
    auto* ev = app.add_subcommand("eval", "Benchmark evaluation");
    ev->require_subcommand(1);
    auto* ev_run = ev->add_subcommand("run", "Execute and judge model responses");
    std::string ev_bench;
    std::string ev_responses;
    std::string ev_report;
    std::string ev_model;
    ev_run->add_option("--bench", ev_bench)->required();
    ev_run->add_option("--responses", ev_responses)->required()->check(CLI::ExistingFile);
    ev_run->add_option("--report", ev_report)->required();
    ev_run->add_option("--model", ev_model, "Model name recorded in the report");
    ev_run->callback([&] {
        action = [&] {
            const RunConfig c = resolve(g);
            auto sb = make_sandbox(c);
            auto gw = make_gateway(c);
            eval::EvalOptions o = eval_options(c);
            if (!ev_model.empty()) o.model_name = ev_model;
            const auto pkg = eval::load_bench(ev_bench);
            const auto records = eval::run_eval(*gw, *sb, pkg, eval::load_responses(ev_responses), o);
            auto report = eval::aggregate(records, o);
            report.bench_hash = pkg.content_hash;
            write_file(ev_report, eval::report_json(report, records));
            emit(to_json(report));
        };
    });

    // reward
    auto* rw = app.add_subcommand("reward", "Reward service");
    rw->require_subcommand(1);
    auto* rw_serve = rw->add_subcommand("serve", "Serve rewards over HTTP");
    std::string rw_store;
    int rw_port = -1;
    rw_serve->add_option("--store", rw_store, "Benchmark package or engine dataset")->required();
    rw_serve->add_option("--port", rw_port);
    rw_serve->callback([&] {
        action = [&] {
            const RunConfig c = resolve(g);
            auto sb = make_sandbox(c);
            auto gw = make_gateway(c);
            reward::RewardOptions ro;
            ro.timeout = timeout_of(c);
            ro.judge_attempts = c.reward.judge_attempts;
            reward::RewardService service(*gw, *sb, ro);
            const auto store = reward::ReferenceStore::load(rw_store);
            reward::RewardServer server(service, store, reward::std_kind_from_string(c.reward.std_kind));
            const int port = server.bind(c.reward.host, rw_port >= 0 ? rw_port : c.reward.port);
            emit({{"listening", c.reward.host + ":" + std::to_string(port)}, {"samples", store.size()}});
            serve_until_signal([&server] { server.stop(); });
            server.listen();
        };
    });

    // bench
    auto* bn = app.add_subcommand("bench", "Benchmark construction");
    bn->require_subcommand(1);
    std::string bn_candidates;
    std::string bn_annotations;
    std::string bn_out;
    std::string bn_patches;
    std::size_t bn_k = 0;
    std::size_t bn_n = 0;
    int bn_port = -1;
    auto* bn_rank = bn->add_subcommand("rank", "Rank agent candidates and keep the top k");
    bn_rank->add_option("--candidates", bn_candidates)->required();
    bn_rank->add_option("--k", bn_k, "Defaults to bench.k, capped at the candidate count");
    bn_rank->add_option("--out", bn_out, "Write the ranked candidate directory here");
    bn_rank->callback([&] {
        action = [&] {
            const RunConfig c = resolve(g);
            auto all = bench::load_candidates(bn_candidates);
            const std::size_t k = bn_k ? bn_k : std::min(c.bench.k, all.size());
            const auto ranked = bench::rank_candidates(std::move(all), k, rank_options(c));
            if (!bn_out.empty()) bench::write_candidates(ranked, bn_out);
            json rows = json::array();
            for (const auto& r : ranked) {
                rows.push_back({{"id", r.id}, {"final_score", r.final_score}, {"iterations_used", r.iterations_used}});
            }
            emit({{"k", k}, {"ranked", rows}});
        };
    });
    auto* bn_serve = bn->add_subcommand("serve", "Serve the annotation queue");
    bn_serve->add_option("--candidates", bn_candidates, "Ranked candidate directory")->required();
    bn_serve->add_option("--annotations", bn_annotations, "Append-only annotation log")->required();
    bn_serve->add_option("--port", bn_port);
    bn_serve->callback([&] {
        action = [&] {
            const RunConfig c = resolve(g);
            bench::AnnotationStore store(bn_annotations);
            bench::BenchServer server(bench::load_candidates(bn_candidates), store, queue_options(c));
            const int port = server.bind(c.bench.host, bn_port >= 0 ? bn_port : c.bench.port);
            emit({{"listening", c.bench.host + ":" + std::to_string(port)}});
            serve_until_signal([&server] { server.stop(); });
            server.listen();
            store.snapshot(fs::path(bn_annotations).replace_extension(".aggregates.json"));
        };
    });
    auto* bn_pkg = bn->add_subcommand("package", "Select the final samples and write the benchmark package");
    std::string bn_name = "bench";
    bn_pkg->add_option("--candidates", bn_candidates, "Ranked candidate directory")->required();
    bn_pkg->add_option("--annotations", bn_annotations)->required()->check(CLI::ExistingFile);
    bn_pkg->add_option("--patches", bn_patches, "Directory of <id>.py replacements");
    bn_pkg->add_option("--n", bn_n, "Defaults to bench.n");
    bn_pkg->add_option("--name", bn_name);
    bn_pkg->add_option("--out", bn_out)->required();
    bn_pkg->callback([&] {
        action = [&] {
            const RunConfig c = resolve(g);
            auto sb = make_sandbox(c);
            const auto ranked = bench::load_candidates(bn_candidates);
            bench::AnnotationStore store(bn_annotations);
            bench::PackageOptions po;
            po.name = bn_name;
            po.n = bn_n ? bn_n : c.bench.n;
            po.patch_dir = bn_patches;
            po.timeout = timeout_of(c);
            const auto r = bench::package(ranked, store.aggregates(), *sb, po, bn_out);
            emit({{"selected", r.selected},
                  {"patched", r.patched},
                  {"skipped", r.skipped},
                  {"content_hash", r.package.content_hash}});
        };
    });

    // prompt
    auto* pr = app.add_subcommand("prompt", "Inspect shipped prompt templates");
    pr->require_subcommand(1);
    auto* pr_list = pr->add_subcommand("list", "List template ids and their slots");
    pr_list->callback([&] {
        action = [&] {
            json out = json::object();
            const auto& reg = llm::PromptRegistry::builtin();
            for (const auto& id : reg.ids()) out[id] = reg.get(id).required_slots;
            emit(out);
        };
    });
    auto* pr_render = pr->add_subcommand("render", "Render a template");
    std::string pr_id;
    std::vector<std::string> pr_set;
    pr_render->add_option("id", pr_id)->required();
    pr_render->add_option("--set", pr_set, "slot=value");
    pr_render->callback([&] {
        action = [&] {
            llm::Bindings b;
            parse_set(pr_set, b);
            std::cout << llm::PromptRegistry::builtin().render(pr_id, b);
        };
    });

    auto* cfg = app.add_subcommand("config", "Print the effective configuration");
    cfg->callback([&] { action = [&] { emit(to_json(resolve(g))); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (action) action();
        return 0;
    } catch (const Error& e) {
        spdlog::error("{}", e.what());
        std::cout << json({{"error", to_string(e.kind())}, {"message", e.what()}}).dump() << std::endl;
        return 1;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        std::cout << json({{"error", "Internal"}, {"message", e.what()}}).dump() << std::endl;
        return 1;
    }
}

}  // namespace forge::cli
