// Acceptance checks. One PASS/FAIL line per criterion; exit status 1 when any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "forge_test.hpp"

using namespace forge;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void expect(bool cond, const std::string& what) {
    if (!cond) throw Failure(what);
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt2(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

int failures = 0;

void criterion(const std::string& name, const std::function<std::string()>& body) {
    const auto t0 = Clock::now();
    std::string line;
    bool ok = false;
    try {
        line = body();
        ok = true;
    } catch (const std::exception& e) {
        line = e.what();
    }
    if (!ok) ++failures;
    std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << line << " (" << fmt2(seconds_since(t0)) << " s)"
              << std::endl;
}

// ---------------------------------------------------------------------------

std::string exec_rate() {
    const json corpus = json::parse(read_file(test::fixture("exec_corpus/corpus.json")));
    sandbox::Sandbox sb;
    sandbox::EnvManifest missing;
    missing.id = "missing-interpreter";
    missing.interpreter = "/nonexistent/bin/python3";
    sb.add_manifest(missing);

    std::vector<eval::EvalRecord> records;
    std::map<std::string, int> by_status;
    for (const auto& row : corpus["scripts"]) {
        const std::string name = row["script"];
        sandbox::ExecutionRequest req;
        req.guest_script = read_file(test::fixture("exec_corpus/" + name));
        req.timeout = std::chrono::seconds(5);
        req.env_manifest_id = row["env"];
        eval::EvalRecord r;
        r.sample_id = name;
        r.generated_code = req.guest_script;
        r.has_code = true;
        r.exec = sb.execute(req);
        const std::string got(sandbox::to_string(r.exec.status));
        expect(got == row["expect"].get<std::string>(), name + " expected " + row["expect"].get<std::string>() +
                                                            ", got " + got);
        ++by_status[got];
        records.push_back(std::move(r));
    }
    const double rate = eval::eval_exec_rate(records);
    const auto report = eval::aggregate(records);
    expect(rate == 60.00 && report.exec_rate == 60.00, "exec rate " + fmt2(rate));
    expect(records.size() == 20, "corpus size");
    std::string detail = "exec rate " + fmt2(rate) + " over " + std::to_string(records.size()) + " scripts [";
    for (const auto& [k, v] : by_status) detail += k + "=" + std::to_string(v) + " ";
    detail.back() = ']';
    return detail;
}

std::string timeout_enforcement() {
    const auto& sb = test::shared_sandbox();
    const auto timeout = std::chrono::seconds(2);
    double worst = 0;
    for (int i = 0; i < 20; ++i) {
        sandbox::ExecutionRequest req;
        req.guest_script = "while True:\n    pass\n";
        req.timeout = timeout;
        const auto r = sb.execute(req);
        expect(r.status == sandbox::ExecStatus::Timeout, "repetition " + std::to_string(i) + " status " +
                                                             std::string(sandbox::to_string(r.status)));
        expect(r.wall_time_ms <= 2000.0 + 5000.0, "wall time " + fmt2(r.wall_time_ms) + " ms");
        worst = std::max(worst, r.wall_time_ms);
    }
    return "20/20 Timeout, worst wall time " + fmt2(worst) + " ms for a 2000 ms limit";
}

// Independent statement of the reward rule.
double oracle_total(double fmt, double exec, double code, double image) {
    const double gated = exec == 0.0 ? 0.0 : image;
    double total = 0.0;
    for (double term : {fmt, exec, code, gated}) total = total + term;
    return total;
}

std::string reward_oracle() {
    std::mt19937_64 rng(20240607);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);
    std::size_t gated = 0;
    for (int i = 0; i < 10000; ++i) {
        const double fmt = coin(rng) ? 1.0 : 0.0;
        const double exec = coin(rng) ? 1.0 : 0.0;
        // Mix in exact grid values as well as arbitrary doubles.
        const double code = i % 3 == 0 ? std::round(unit(rng) * 100) / 100 : unit(rng);
        const double image = i % 5 == 0 ? 1.0 : unit(rng);
        const auto b = reward::combine(fmt, exec, code, image);
        const double want = oracle_total(fmt, exec, code, image);
        expect(std::memcmp(&b.r_total, &want, sizeof want) == 0, "tuple " + std::to_string(i) + " differs");
        if (exec == 0.0) {
            expect(b.r_image == 0.0, "r_image not gated at tuple " + std::to_string(i));
            ++gated;
        }
    }

    // Gating through the service: crashing responses never reach the image judge.
    llm::MockScript s;
    s.add_rule(test::rule("reward_code", {test::reply("Score: 60")}));
    s.add_rule(test::rule("reward_image", {test::reply("Score: 90")}));
    test::MockGateway mg(s);
    reward::RewardOptions ro;
    ro.timeout = std::chrono::seconds(30);
    reward::RewardService service(mg.gateway, test::shared_sandbox(), ro);
    for (int i = 0; i < 10; ++i) {
        const std::string resp = test::fenced("raise SystemExit(" + std::to_string(i + 1) + ")\n");
        const auto b = service.content_reward(resp, test::plot_code("1"), test::seed_image("dots"));
        expect(b.r_exec == 0.0 && b.r_image == 0.0, "service did not gate a crash");
        expect(b.r_total == oracle_total(b.r_fmt, b.r_exec, b.r_code, 0.9), "service total");
        ++gated;
    }
    expect(mg.mock->call_count("reward_image") == 0, "image judge called for a failed execution");
    return "10000 tuples bit-identical to the oracle; gating held in " + std::to_string(gated) + "/" +
           std::to_string(gated) + " exec-failure cases";
}

std::string advantage_properties() {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<int> g(2, 16);
    std::uniform_real_distribution<double> r(0.0, 4.0);
    double worst_mean = 0, worst_std = 0;
    int groups = 0;
    while (groups < 1000) {
        std::vector<double> rewards(static_cast<std::size_t>(g(rng)));
        for (auto& x : rewards) x = r(rng);
        if (std::all_of(rewards.begin(), rewards.end(), [&](double x) { return x == rewards[0]; })) continue;
        const auto a = reward::group_advantages(rewards);
        double mean = 0;
        for (double x : a) mean += x;
        mean /= static_cast<double>(a.size());
        double var = 0;
        for (double x : a) var += (x - mean) * (x - mean);
        const double sd = std::sqrt(var / static_cast<double>(a.size()));
        worst_mean = std::max(worst_mean, std::fabs(mean));
        worst_std = std::max(worst_std, std::fabs(sd - 1.0));
        ++groups;
    }
    expect(worst_mean < 1e-9, "max |mean| " + std::to_string(worst_mean));
    expect(worst_std < 1e-9, "max |std-1| " + std::to_string(worst_std));

    const auto a = reward::group_advantages({0, 2});
    expect(a == std::vector<double>{-1, 1}, "[0,2]");
    const auto b = reward::group_advantages({1, 2, 3});
    expect(std::fabs(b[0] + 1.2247) < 1e-4 && std::fabs(b[1]) < 1e-4 && std::fabs(b[2] - 1.2247) < 1e-4, "[1,2,3]");
    for (const auto& flat : std::vector<std::vector<double>>{{1, 1, 1, 1}, {0, 0}, {3.5}}) {
        const auto z = reward::group_advantages(flat);
        expect(std::all_of(z.begin(), z.end(), [](double x) { return x == 0.0; }), "zero-variance group");
    }
    std::ostringstream out;
    out << "1000 groups, max |mean| " << worst_mean << ", max |std-1| " << worst_std << "; exact cases ok";
    return out.str();
}

std::string difficulty() {
    std::vector<reward::DifficultyGroup> groups;
    for (int s = 0; s <= 8; ++s) {
        reward::DifficultyGroup grp;
        grp.query_id = "q" + std::to_string(s);
        for (int i = 0; i < 8; ++i) grp.successes.push_back(i < s);
        groups.push_back(grp);
    }
    const auto kept = reward::difficulty_filter(groups);
    const std::vector<std::string> want = {"q2", "q3", "q4", "q5", "q6"};
    expect(kept == want, "kept " + json(kept).dump());
    return "G=8 keeps success counts {2,3,4,5,6}";
}

llm::MockScript constant_scores(const std::string& score) {
    llm::MockScript s;
    s.add_rule(test::rule("image_score", {test::reply("Close.\nScore: " + score)}));
    s.add_rule(test::rule("rescore", {test::reply(test::fenced(test::kCrashCode))}));
    s.add_rule(test::rule("repair", {test::reply(test::fenced(test::plot_code("3")))}));
    return s;
}

std::string agent_bounds() {
    agent::AgentConfig cfg;
    cfg.timeout = std::chrono::seconds(60);
    const std::string target = test::seed_image("dots");

    test::MockGateway adversarial(constant_scores("50"));
    const auto a = agent::refine_loop(adversarial.gateway, test::shared_sandbox(), target, test::plot_code("1"), cfg);
    expect(a.status == agent::AgentStatus::MaxIter, "constant 50 ended " + std::string(agent::to_string(a.status)));
    expect(a.iteration == 10, "constant 50 stopped at " + std::to_string(a.iteration));
    const auto repairs = adversarial.mock->call_count("repair");
    expect(repairs <= 20 && a.repair_count <= 20, "repairs " + std::to_string(repairs));

    test::MockGateway high(constant_scores("91"));
    const auto h = agent::refine_loop(high.gateway, test::shared_sandbox(), target, test::plot_code("1"), cfg);
    expect(h.status == agent::AgentStatus::Converged && h.iteration == 1, "score 91 did not converge at 1");

    agent::AgentConfig short_cfg = cfg;
    short_cfg.max_iterations = 2;
    test::MockGateway edge(constant_scores("90"));
    const auto e = agent::refine_loop(edge.gateway, test::shared_sandbox(), target, test::plot_code("1"), short_cfg);
    expect(e.status != agent::AgentStatus::Converged, "score 90 converged");
    return "constant 50: MaxIter at 10 with " + std::to_string(repairs) + " repairs; 91: Converged at 1; 90: " +
           std::string(agent::to_string(e.status));
}

// 64 pairs with per-pair scripted verdicts.
struct Verdicts {
    std::vector<bool> code, image, consistency;
};

engine::ImageCodePair filter_pair(int i) {
    engine::ImageCodePair p;
    p.id = "p" + std::to_string(i);
    p.code = "# pair " + std::to_string(i) + "\n" + test::plot_code(std::to_string(i));
    p.image = test::seed_image("grid") + "pair-" + std::to_string(i);
    p.lineage = "grid";
    return p;
}

std::vector<std::string> run_filter(const std::vector<engine::ImageCodePair>& pairs, const Verdicts& v) {
    llm::MockScript s;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const std::string marker = "# pair " + std::to_string(i) + "\n";
        s.add_rule(test::rule("q_code", {test::reply(v.code[i] ? test::kQualified : test::kDisqualified)}, {marker}));
        s.add_rule(test::rule("q_image", {test::reply(v.image[i] ? test::kPass : test::kFail)}, {},
                              sha256_hex(pairs[i].image)));
        s.add_rule(test::rule("q_consistency", {test::reply(v.consistency[i] ? test::kMatch : test::kMismatch)},
                              {marker}));
    }
    test::MockGateway mg(s);
    engine::Engine e(mg.gateway, test::shared_sandbox());
    const auto result = e.filter(pairs);
    expect(result.undecided.empty(), "undecided pairs");
    return result.passed;
}

std::string filter_algebra() {
    std::vector<engine::ImageCodePair> pairs;
    for (int i = 0; i < 64; ++i) pairs.push_back(filter_pair(i));
    std::mt19937 rng(5);
    std::bernoulli_distribution positive(0.7);
    Verdicts v;
    for (auto* col : {&v.code, &v.image, &v.consistency}) {
        for (int i = 0; i < 64; ++i) col->push_back(positive(rng));
    }
    auto intersection = [&](const Verdicts& vv) {
        std::vector<std::string> out;
        for (int i = 0; i < 64; ++i) {
            if (vv.code[i] && vv.image[i] && vv.consistency[i]) out.push_back("p" + std::to_string(i));
        }
        return out;
    };
    auto got = run_filter(pairs, v);
    expect(got == intersection(v), "output differs from the intersection");
    const std::size_t initial = got.size();

    std::size_t tightenings = 0;
    for (int round = 0; round < 6; ++round) {
        auto& col = round % 3 == 0 ? v.code : round % 3 == 1 ? v.image : v.consistency;
        for (int i = 0; i < 64; ++i) {
            if (col[i] && rng() % 4 == 0) col[i] = false;
        }
        const auto next = run_filter(pairs, v);
        expect(next == intersection(v), "tightened output differs from the intersection");
        const std::set<std::string> before(got.begin(), got.end());
        expect(std::all_of(next.begin(), next.end(), [&](const std::string& id) { return before.count(id) > 0; }),
               "tightening grew the output");
        got = next;
        ++tightenings;
    }
    return "64 pairs, " + std::to_string(initial) + " pass = intersection; " + std::to_string(tightenings) +
           " tightenings monotone (final " + std::to_string(got.size()) + ")";
}

std::string geometry_coverage() {
    const auto& reg = geometry::TemplateRegistry::builtin();
    std::size_t scripts = 0;
    for (const auto& t : reg.templates()) {
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            const json params = geometry::sample_parameters(t.space, seed);
            const std::string a = geometry::instantiate(t.id, params, seed);
            const std::string b = geometry::instantiate(t.id, geometry::sample_parameters(t.space, seed), seed);
            expect(a == b, t.id + " seed " + std::to_string(seed) + " not reproducible");
            ++scripts;
        }
    }
    const auto families = reg.families();
    expect(families.size() == 8 && geometry::all_families().size() == 8, "families " + std::to_string(families.size()));

    geometry::BatchOptions opts;
    opts.count = 1000;
    opts.seed = 20251018;
    opts.timeout = std::chrono::seconds(60);
    const auto batch = geometry::synthesize_batch(test::shared_sandbox(), opts);
    const double rate = 100.0 * static_cast<double>(batch.pairs.size()) / 1000.0;
    for (const auto& f : batch.failures) std::cerr << "render failure " << f.id << ": " << f.message << "\n";
    expect(rate >= 99.0, "render success " + fmt2(rate) + "%");
    return std::to_string(scripts) + " scripts reproducible over " + std::to_string(reg.templates().size()) +
           " templates; render success " + fmt2(rate) + "% of 1000; 8 families";
}

// ---------------------------------------------------------------------------

const std::vector<std::string> kSeeds = {"bars", "circles", "dots", "grid", "triangle"};

llm::MockScript e2e_script() {
    llm::MockScript s;
    for (std::size_t i = 0; i < kSeeds.size(); ++i) {
        const auto& name = kSeeds[i];
        const std::string sha = sha256_hex(test::seed_image(name));
        s.add_rule(test::rule("code_gen", {test::reply(test::fenced(read_file(test::fixture("seed_scripts/" + name + ".py"))))}, {}, sha));
        s.add_rule(test::rule("principle", {test::reply("Principle for " + name)}, {}, sha));
        std::string blocks = "Two variants.\n";
        for (int k = 1; k <= 2; ++k) blocks += "```python\n" + test::plot_code(std::to_string(10 * (i + 1) + k)) + "```\n";
        s.add_rule(test::rule("diversify", {test::reply(blocks)}, {"Principle for " + name}));
    }
    s.add_rule(test::rule("caption", {test::reply("A small STEM figure.")}));
    s.add_rule(test::rule("q_code", {test::reply(test::kQualified)}));
    s.add_rule(test::rule("q_image", {test::reply(test::kPass)}));
    s.add_rule(test::rule("q_consistency", {test::reply(test::kMatch)}));
    s.add_rule(test::rule("analyze", {test::reply("- one axes\n- plotted marks as traced")}));
    s.add_rule(test::rule("refine_caption", {test::reply("A small STEM figure, corrected against its code.")}));
    s.add_rule(test::rule("explain_draft", {test::reply(test::fenced(test::plot_code("900")))}));
    // Every third explanatory rewrite is broken, forcing the fallback path.
    std::vector<llm::MockReply> rewrites;
    for (int i = 0; i < 30; ++i) {
        rewrites.push_back(test::reply("Step by step.\n" +
                                       test::fenced(i % 3 == 2 ? test::kCrashCode : test::plot_code(std::to_string(500 + i)))));
    }
    s.add_rule(test::rule("refine_code", rewrites));
    return s;
}

struct E2eRun {
    std::string manifest;
    std::string triplets;
    grounding::GroundingSummary summary;
    double seconds = 0;
};

E2eRun e2e_once(const fs::path& root) {
    const auto t0 = Clock::now();
    test::MockGateway mg(e2e_script());
    engine::EngineConfig ec;
    ec.k = 2;
    ec.timeout = std::chrono::seconds(60);
    engine::Engine e(mg.gateway, test::shared_sandbox(), ec);
    const auto seeds = engine::load_seeds(test::fixture("seeds"));
    expect(seeds.size() == 5, "seed count");
    const auto summary = e.run(seeds, root / "dataset");
    expect(summary.ir == 5 && summary.id == 10, "engine summary " + engine::to_json(summary).dump());
    E2eRun r;
    r.summary = grounding::run(mg.gateway, test::shared_sandbox(), root / "dataset", root / "triplets",
                               std::chrono::seconds(60));
    r.seconds = seconds_since(t0);
    r.manifest = read_file(root / "dataset" / "manifest.jsonl");
    r.triplets = read_file(root / "triplets" / "triplets.jsonl");
    return r;
}

std::string end_to_end() {
    test::TempDir a, b;
    const auto first = e2e_once(a.path());
    const auto second = e2e_once(b.path());
    expect(first.manifest == second.manifest, "dataset manifests differ between runs");
    expect(first.triplets == second.triplets, "triplets differ between runs");
    expect(first.seconds < 120 && second.seconds < 120, "run took " + fmt2(first.seconds) + " s");
    const auto rows = read_jsonl(a / "triplets/triplets.jsonl");
    expect(rows.size() == 15 && first.summary.triplets == 15 && first.summary.failed == 0,
           "triplets " + std::to_string(rows.size()));
    expect(first.summary.fallbacks > 0, "fallback path not exercised");
    std::size_t ok = 0;
    for (const auto& row : rows) {
        for (const char* key : {"id", "image_path", "caption", "code", "pipeline"}) {
            expect(row.contains(key) && row[key].is_string() && !row[key].get<std::string>().empty(),
                   "triplet missing " + std::string(key));
        }
        expect(looks_like_image(read_file(a / "dataset" / row["image_path"].get<std::string>())),
               "triplet image unreadable");
        sandbox::ExecutionRequest req;
        req.guest_script = row["code"];
        req.timeout = std::chrono::seconds(60);
        expect(test::shared_sandbox().execute(req).ok(), "triplet " + row["id"].get<std::string>() + " code fails");
        ++ok;
    }
    return std::to_string(rows.size()) + " triplets, " + std::to_string(ok) + "/" + std::to_string(rows.size()) +
           " codes execute, " + std::to_string(first.summary.fallbacks) + " fallbacks, runs " + fmt2(first.seconds) +
           " s and " + fmt2(second.seconds) + " s, byte-identical";
}

std::string parser_fuzz() {
    const std::vector<std::string> base = {
        test::kQualified, test::kDisqualified, test::kPass, test::kFail, test::kMatch, test::kMismatch,
        "Score: 85", "The reconstruction is close.\nScore: 72/100\n", "**Score:** 99.5", "Score: N/A\nScore: 40",
        "[Verdict]: Qualified or Disqualified", "Score: -3", "Score: 1e400", "Score: 100", "Score: 0.0001"};
    const std::string alphabet = "Score:Verdict[]*#/ -+.0123456789eE\nQualifiedPassFailMatchNA\t\xff\x00";
    std::mt19937_64 rng(424242);
    auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
    std::size_t accepted = 0, rejected = 0, verdicts = 0;
    for (int i = 0; i < 100000; ++i) {
        std::string s;
        if (i % 4 == 0) {
            const std::size_t len = pick(80);
            for (std::size_t k = 0; k < len; ++k) s.push_back(static_cast<char>(rng() & 0xff));
        } else {
            s = base[pick(base.size())];
            const std::size_t edits = 1 + pick(6);
            for (std::size_t k = 0; k < edits; ++k) {
                const std::size_t pos = s.empty() ? 0 : pick(s.size() + 1);
                const char c = alphabet[pick(alphabet.size())];
                switch (pick(4)) {
                    case 0: s.insert(s.begin() + static_cast<long>(pos), c); break;
                    case 1: if (pos < s.size()) s.erase(pos, 1); break;
                    case 2: if (pos < s.size()) s[pos] = c; break;
                    default: s.resize(std::min(s.size(), pos)); break;
                }
            }
        }
        try {
            const double v = llm::parse_score(s);
            expect(std::isfinite(v) && v >= 0.0 && v <= 100.0, "accepted score " + std::to_string(v));
            ++accepted;
        } catch (const Error&) {
            ++rejected;
        }
        for (auto fam : {llm::VerdictFamily::CodeQuality, llm::VerdictFamily::ImageQuality,
                         llm::VerdictFamily::Consistency}) {
            try {
                llm::parse_verdict(s, fam);
                ++verdicts;
            } catch (const Error&) {
            }
        }
    }
    return "100000 inputs: " + std::to_string(accepted) + " scores accepted in [0,100], " +
           std::to_string(rejected) + " rejected, " + std::to_string(verdicts) + " verdicts parsed, no crashes";
}

std::string bench_selection() {
    std::mt19937 rng(77);
    std::vector<bench::Candidate> cs;
    for (int i = 0; i < 50; ++i) {
        bench::Candidate c;
        c.id = "cand-" + std::to_string(100 + i);
        c.code = test::plot_code(std::to_string(i));
        c.final_score = 90 + static_cast<double>(rng() % 10);
        c.iterations_used = 1 + static_cast<int>(rng() % 10);
        c.image = test::seed_image("dots");
        c.rendered = c.image;
        cs.push_back(c);
    }
    const auto ranked = bench::rank_candidates(cs, 50);
    std::vector<bench::Annotation> anns;
    std::int64_t ts = 1000;
    for (const auto& c : cs) {
        for (const char* who : {"ann-a", "ann-b", "ann-c"}) {
            auto score = [&] { return 1 + static_cast<int>(rng() % 5); };
            anns.push_back({who, c.id, score(), score(), score(), ts++});
            if (rng() % 5 == 0) anns.push_back({who, c.id, score(), score(), score(), ts++});  // revision
        }
    }
    const auto base = bench::select_final(ranked, bench::ingest_annotations(anns), 10);
    for (int t = 0; t < 100; ++t) {
        std::shuffle(anns.begin(), anns.end(), rng);
        expect(bench::select_final(ranked, bench::ingest_annotations(anns), 10) == base,
               "selection changed under permutation " + std::to_string(t));
    }
    test::TempDir out;
    bench::PackageOptions po;
    po.n = 10;
    po.name = "acceptance";
    po.timeout = std::chrono::seconds(60);
    const auto result = bench::package(ranked, bench::ingest_annotations(anns), test::shared_sandbox(), po, out.path());
    expect(result.selected == base, "packaged selection differs");
    const auto pkg = eval::load_bench(out.path());
    std::size_t verified = 0;
    for (const auto& s : pkg.samples) {
        sandbox::ExecutionRequest req;
        req.guest_script = s.reference_code;
        req.timeout = std::chrono::seconds(60);
        expect(test::shared_sandbox().execute(req).ok(), s.id + " does not re-verify");
        ++verified;
    }
    expect(verified == 10, "packaged " + std::to_string(verified));
    return "top-10 identical over 100 permutations; " + std::to_string(verified) + "/10 packaged samples re-verify";
}

std::string published_results() {
    const json fixture = json::parse(read_file(test::fixture("published_results.json")));
    std::size_t rows = 0;
    for (const auto& row : fixture["rows"]) {
        // Expand the published record into 1000 per-sample records.
        const int n = 1000;
        const int successes = static_cast<int>(std::lround(row["exec_rate"].get<double>() * 10));
        const long image_total = std::lround(row["image"].get<double>() * n);
        const long code_total = std::lround(row["code"].get<double>() * n);
        std::vector<eval::EvalRecord> records(n);
        for (int i = 0; i < n; ++i) {
            auto& r = records[static_cast<std::size_t>(i)];
            r.sample_id = "s" + std::to_string(i);
            r.has_code = true;
            r.exec.status = i < successes ? sandbox::ExecStatus::Success : sandbox::ExecStatus::NonZeroExit;
            if (i < successes) {
                r.image_score = static_cast<double>(image_total / successes + (i < image_total % successes ? 1 : 0));
            }
            r.code_score = static_cast<double>(code_total / n + (i < code_total % n ? 1 : 0));
        }
        const auto report = eval::aggregate(records);
        const std::string model = row["model"];
        expect(report.exec_rate == row["exec_rate"].get<double>(), model + " exec " + fmt2(report.exec_rate));
        expect(report.mean_image_score == row["image"].get<double>(), model + " image " + fmt2(report.mean_image_score));
        expect(report.mean_code_score == row["code"].get<double>(), model + " code " + fmt2(report.mean_code_score));
        expect(report.avg == row["avg"].get<double>(), model + " avg " + fmt2(report.avg) + " vs " +
                                                           fmt2(row["avg"].get<double>()));
        if (model == "Qwen3-VL-8B-Instruct") expect(fmt2(report.exec_rate) == "85.30", "8B-Instruct exec rate");
        ++rows;
    }
    return std::to_string(rows) + " published rows reproduced (exec, image, code, avg)";
}

}  // namespace

int main() {
    spdlog::set_level(spdlog::level::err);
    criterion("exec_rate_exactness", exec_rate);
    criterion("timeout_enforcement", timeout_enforcement);
    criterion("reward_oracle_equivalence", reward_oracle);
    criterion("advantage_properties", advantage_properties);
    criterion("difficulty_filter", difficulty);
    criterion("code_agent_bounds", agent_bounds);
    criterion("quality_filter_algebra", filter_algebra);
    criterion("end_to_end_mock_pipeline", end_to_end);
    criterion("parser_fuzz", parser_fuzz);
    criterion("bench_selection", bench_selection);
    criterion("reference_number_plumbing", published_results);
    criterion("geometry_determinism_coverage", geometry_coverage);
    std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << std::endl;
    return failures == 0 ? 0 : 1;
}
