#include <spdlog/spdlog.h>

#include "forge/cli.hpp"

namespace forge::cli {

namespace fs = std::filesystem;

namespace {

// Walks one JSON object, handing each key to a field reader and rejecting
// keys nobody claimed.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw Error(ErrorKind::SchemaError, where() + ": expected an object");
    }

    template <typename T>
    void field(const char* key, T& out) {
        claimed_.push_back(key);
        auto it = j_.find(key);
        if (it == j_.end()) return;
        try {
            out = it->template get<T>();
        } catch (const json::exception&) {
            throw Error(ErrorKind::SchemaError, at(key) + ": wrong type");
        }
    }

    const json* child(const char* key) {
        claimed_.push_back(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    void done() const {
        for (const auto& [key, value] : j_.items()) {
            (void)value;
            if (std::find(claimed_.begin(), claimed_.end(), key) == claimed_.end()) {
                throw Error(ErrorKind::SchemaError, at(key) + ": unknown key");
            }
        }
    }

    std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    template <typename T>
    void require(bool ok, const char* key, const T& what) const {
        if (!ok) throw Error(ErrorKind::SchemaError, at(key) + ": " + what);
    }

private:
    std::string where() const { return path_.empty() ? "config" : path_; }

    const json& j_;
    std::string path_;
    std::vector<std::string> claimed_;
};

}  // namespace

RunConfig config_from_json(const json& j) {
    RunConfig c;
    Section root(j, "");
    root.field("mock_mode", c.mock_mode);
    root.field("mock_script", c.mock_script);
    root.field("transcript", c.transcript);
    root.field("log_level", c.log_level);
    root.require(spdlog::level::from_str(c.log_level) != spdlog::level::off || c.log_level == "off", "log_level",
                 "unknown level " + c.log_level);

    if (const json* p = root.child("providers")) {
        if (!p->is_object()) throw Error(ErrorKind::SchemaError, "providers: expected an object");
        for (const auto& [name, value] : p->items()) c.providers[name] = llm::provider_config_from_json(name, value);
    }
    if (const json* r = root.child("routing")) {
        if (!r->is_object()) throw Error(ErrorKind::SchemaError, "routing: expected an object");
        for (const auto& [task, value] : r->items()) {
            if (!value.is_string()) throw Error(ErrorKind::SchemaError, "routing." + task + ": expected a provider name");
            c.routing[task] = value.get<std::string>();
        }
    }

    if (const json* s = root.child("sandbox")) {
        Section sec(*s, "sandbox");
        auto& o = c.sandbox;
        sec.field("timeout_s", o.timeout_s);
        sec.field("memory_mb", o.memory_mb);
        sec.field("output_cap_mb", o.output_cap_mb);
        sec.field("isolate_network", o.isolate_network);
        sec.field("keep_workdirs", o.keep_workdirs);
        sec.field("scratch_root", o.scratch_root);
        sec.field("manifests_dir", o.manifests_dir);
        sec.done();
        sec.require(o.timeout_s > 0, "timeout_s", "must be > 0");
        sec.require(o.memory_mb >= 64, "memory_mb", "must be >= 64");
        sec.require(o.output_cap_mb >= 1, "output_cap_mb", "must be >= 1");
    }
    if (const json* s = root.child("engine")) {
        Section sec(*s, "engine");
        auto& o = c.engine;
        sec.field("k", o.k);
        sec.field("max_repairs", o.max_repairs);
        sec.field("sg_count", o.sg_count);
        sec.field("sg_seed", o.sg_seed);
        sec.field("workers", o.workers);
        sec.field("run_ir", o.run_ir);
        sec.field("run_id", o.run_id);
        sec.done();
        sec.require(o.k >= 1, "k", "must be >= 1");
        sec.require(o.max_repairs >= 0, "max_repairs", "must be >= 0");
        sec.require(o.workers >= 1, "workers", "must be >= 1");
    }
    if (const json* s = root.child("agent")) {
        Section sec(*s, "agent");
        auto& o = c.agent;
        sec.field("max_iterations", o.max_iterations);
        sec.field("threshold", o.threshold);
        sec.field("max_repairs_per_iteration", o.max_repairs_per_iteration);
        sec.done();
        sec.require(o.max_iterations >= 1, "max_iterations", "must be >= 1");
        sec.require(o.threshold >= 0 && o.threshold <= 100, "threshold", "must be within 0..100");
        sec.require(o.max_repairs_per_iteration >= 0, "max_repairs_per_iteration", "must be >= 0");
    }
    if (const json* s = root.child("eval")) {
        Section sec(*s, "eval");
        auto& o = c.eval;
        sec.field("model_name", o.model_name);
        sec.field("failed_exec_scores_zero", o.failed_exec_scores_zero);
        sec.field("workers", o.workers);
        sec.done();
        sec.require(o.workers >= 1, "workers", "must be >= 1");
    }
    if (const json* s = root.child("reward")) {
        Section sec(*s, "reward");
        auto& o = c.reward;
        sec.field("host", o.host);
        sec.field("port", o.port);
        sec.field("judge_attempts", o.judge_attempts);
        sec.field("std", o.std_kind);
        sec.done();
        sec.require(o.std_kind == "population" || o.std_kind == "sample", "std", "must be population or sample");
        sec.require(o.port >= 0 && o.port <= 65535, "port", "must be within 0..65535");
        sec.require(o.judge_attempts >= 1, "judge_attempts", "must be >= 1");
    }
    if (const json* s = root.child("bench")) {
        Section sec(*s, "bench");
        auto& o = c.bench;
        sec.field("k", o.k);
        sec.field("n", o.n);
        sec.field("rank_mode", o.rank_mode);
        sec.field("score_weight", o.score_weight);
        sec.field("iteration_weight", o.iteration_weight);
        sec.field("assignment", o.assignment);
        sec.field("annotators", o.annotators);
        sec.field("lease_s", o.lease_s);
        sec.field("host", o.host);
        sec.field("port", o.port);
        sec.done();
        sec.require(o.rank_mode == "lexicographic" || o.rank_mode == "weighted", "rank_mode",
                    "must be lexicographic or weighted");
        sec.require(o.assignment == "all" || o.assignment == "partition", "assignment", "must be all or partition");
        sec.require(o.assignment == "all" || !o.annotators.empty(), "annotators", "required for partition assignment");
        sec.require(o.lease_s >= 1, "lease_s", "must be >= 1");
        sec.require(o.port >= 0 && o.port <= 65535, "port", "must be within 0..65535");
    }
    if (const json* s = root.child("grounding")) {
        Section sec(*s, "grounding");
        sec.field("workers", c.grounding.workers);
        sec.done();
        sec.require(c.grounding.workers >= 1, "workers", "must be >= 1");
    }
    root.done();

    for (const auto& [task, provider] : c.routing) {
        if (!c.providers.count(provider)) {
            throw Error(ErrorKind::SchemaError, "routing." + task + ": unknown provider " + provider);
        }
    }
    return c;
}

RunConfig load_config(const fs::path& path) {
    if (!fs::exists(path)) throw Error(ErrorKind::SchemaError, "config file not found: " + path.string());
    const std::string text = read_file(path);
    if (trim(text).empty()) return {};
    const json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorKind::SchemaError, path.string() + ": not valid JSON");
    return config_from_json(j);
}

json to_json(const RunConfig& c) {
    json providers = json::object();
    for (const auto& [name, p] : c.providers) providers[name] = llm::to_json(p);
    const auto& s = c.sandbox;
    const auto& e = c.engine;
    const auto& b = c.bench;
    return {{"mock_mode", c.mock_mode},
            {"mock_script", c.mock_script},
            {"transcript", c.transcript},
            {"log_level", c.log_level},
            {"providers", providers},
            {"routing", c.routing},
            {"sandbox",
             {{"timeout_s", s.timeout_s},
              {"memory_mb", s.memory_mb},
              {"output_cap_mb", s.output_cap_mb},
              {"isolate_network", s.isolate_network},
              {"keep_workdirs", s.keep_workdirs},
              {"scratch_root", s.scratch_root},
              {"manifests_dir", s.manifests_dir}}},
            {"engine",
             {{"k", e.k},
              {"max_repairs", e.max_repairs},
              {"sg_count", e.sg_count},
              {"sg_seed", e.sg_seed},
              {"workers", e.workers},
              {"run_ir", e.run_ir},
              {"run_id", e.run_id}}},
            {"agent",
             {{"max_iterations", c.agent.max_iterations},
              {"threshold", c.agent.threshold},
              {"max_repairs_per_iteration", c.agent.max_repairs_per_iteration}}},
            {"eval",
             {{"model_name", c.eval.model_name},
              {"failed_exec_scores_zero", c.eval.failed_exec_scores_zero},
              {"workers", c.eval.workers}}},
            {"reward", {{"host", c.reward.host}, {"port", c.reward.port}, {"judge_attempts", c.reward.judge_attempts}, {"std", c.reward.std_kind}}},
            {"bench",
             {{"k", b.k},
              {"n", b.n},
              {"rank_mode", b.rank_mode},
              {"score_weight", b.score_weight},
              {"iteration_weight", b.iteration_weight},
              {"assignment", b.assignment},
              {"annotators", b.annotators},
              {"lease_s", b.lease_s},
              {"host", b.host},
              {"port", b.port}}},
            {"grounding", {{"workers", c.grounding.workers}}}};
}

sandbox::Millis timeout_of(const RunConfig& c) {
    return sandbox::Millis(static_cast<long long>(c.sandbox.timeout_s * 1000.0));
}

std::unique_ptr<sandbox::Sandbox> make_sandbox(const RunConfig& c) {
    sandbox::SandboxConfig sc;
    sc.scratch_root = c.sandbox.scratch_root;
    sc.memory_limit_bytes = c.sandbox.memory_mb << 20;
    sc.output_cap_bytes = c.sandbox.output_cap_mb << 20;
    sc.isolate_network = c.sandbox.isolate_network;
    sc.keep_workdirs = c.sandbox.keep_workdirs;
    auto sb = std::make_unique<sandbox::Sandbox>(sc);
    if (!c.sandbox.manifests_dir.empty()) sb->load_manifests(c.sandbox.manifests_dir);
    return sb;
}

namespace {

llm::MockScript load_script(const fs::path& path) {
    return path.extension() == ".jsonl" ? llm::MockScript::from_transcript(path) : llm::MockScript::load(path);
}

}  // namespace

std::unique_ptr<llm::Gateway> make_gateway(const RunConfig& c) {
    llm::GatewayOptions go;
    go.mock_mode = c.mock_mode;
    go.transcript_path = c.transcript;
    auto gw = std::make_unique<llm::Gateway>(go);
    for (const auto& [name, p] : c.providers) {
        if (p.kind == "mock") {
            gw->add_provider(std::make_shared<llm::MockProvider>(
                name, p.mock_script.empty() ? llm::MockScript{} : load_script(p.mock_script)));
        } else if (c.mock_mode) {
            spdlog::debug("mock mode: provider {} not attached", name);
        } else {
            gw->add_provider(std::make_shared<llm::OpenAiProvider>(p));
        }
    }
    if (c.mock_mode) {
        bool have_mock_provider = false;
        for (const auto& [name, p] : c.providers) have_mock_provider |= p.kind == "mock";
        if (!have_mock_provider || !c.mock_script.empty()) {
            llm::install_mock(*gw, c.mock_script.empty() ? llm::MockScript{} : load_script(c.mock_script));
        }
    }
    for (const auto& [task, provider] : c.routing) {
        if (c.mock_mode && c.providers.at(provider).kind != "mock") continue;
        gw->route(task, provider);
    }
    return gw;
}

engine::EngineConfig engine_config(const RunConfig& c) {
    engine::EngineConfig e;
    e.k = c.engine.k;
    e.max_repairs = c.engine.max_repairs;
    e.sg_count = c.engine.sg_count;
    e.sg_seed = c.engine.sg_seed;
    e.workers = c.engine.workers;
    e.timeout = timeout_of(c);
    e.run_ir = c.engine.run_ir;
    e.run_id = c.engine.run_id;
    return e;
}

agent::AgentConfig agent_config(const RunConfig& c) {
    agent::AgentConfig a;
    a.max_iterations = c.agent.max_iterations;
    a.threshold = c.agent.threshold;
    a.max_repairs_per_iteration = c.agent.max_repairs_per_iteration;
    a.timeout = timeout_of(c);
    return a;
}

eval::EvalOptions eval_options(const RunConfig& c) {
    eval::EvalOptions o;
    o.model_name = c.eval.model_name;
    o.failed_exec_scores_zero = c.eval.failed_exec_scores_zero;
    o.workers = c.eval.workers;
    o.timeout = timeout_of(c);
    return o;
}

bench::RankOptions rank_options(const RunConfig& c) {
    bench::RankOptions o;
    o.mode = c.bench.rank_mode == "weighted" ? bench::RankMode::Weighted : bench::RankMode::Lexicographic;
    o.score_weight = c.bench.score_weight;
    o.iteration_weight = c.bench.iteration_weight;
    return o;
}

bench::QueueOptions queue_options(const RunConfig& c) {
    bench::QueueOptions o;
    o.assignment = c.bench.assignment == "partition" ? bench::Assignment::Partition : bench::Assignment::All;
    o.annotators = c.bench.annotators;
    o.lease = std::chrono::seconds(c.bench.lease_s);
    return o;
}

}  // namespace forge::cli
