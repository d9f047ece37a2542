#include <doctest.h>

#include <set>

#include "forge_test.hpp"

using namespace forge;
using engine::Pipeline;

namespace {

std::string seed_script(const std::string& name) { return read_file(test::fixture("seed_scripts/" + name + ".py")); }

engine::SeedImage seed(const std::string& name) { return {name, test::seed_image(name), "fixture"}; }

std::string blocks(const std::vector<std::string>& codes) {
    std::string out = "Variants follow.\n";
    for (const auto& c : codes) out += "```python\n" + c + "```\n";
    return out;
}

// Generation replies keyed by seed image; judges default to positive.
void script_seed(llm::MockScript& s, const std::string& name, const std::vector<std::string>& variants) {
    const std::string sha = sha256_hex(test::seed_image(name));
    s.add_rule(test::rule("caption", {test::reply("Caption of " + name)}, {}, sha));
    s.add_rule(test::rule("code_gen", {test::reply(test::fenced(seed_script(name)))}, {}, sha));
    s.add_rule(test::rule("principle", {test::reply("Principle for " + name)}, {}, sha));
    s.add_rule(test::rule("diversify", {test::reply(blocks(variants))}, {"Principle for " + name}));
}

void positive_judges(llm::MockScript& s) {
    s.add_rule(test::rule("q_code", {test::reply(test::kQualified)}));
    s.add_rule(test::rule("q_image", {test::reply(test::kPass)}));
    s.add_rule(test::rule("q_consistency", {test::reply(test::kMatch)}));
}

engine::EngineConfig config(int k, int repairs = 2) {
    engine::EngineConfig c;
    c.k = k;
    c.max_repairs = repairs;
    c.timeout = std::chrono::seconds(60);
    return c;
}

engine::ImageCodePair bare_pair(const std::string& id) {
    engine::ImageCodePair p;
    p.id = id;
    p.code = test::plot_code("7");
    p.image = test::seed_image("dots");
    p.lineage = "dots";
    return p;
}

ErrorKind kind_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    return ErrorKind::Io;
}

}  // namespace

TEST_SUITE("engine") {
    TEST_CASE("load_seeds from a directory and an index") {
        const auto seeds = engine::load_seeds(test::fixture("seeds"));
        REQUIRE(seeds.size() == 5);
        CHECK(seeds.front().id == "bars");
        CHECK(seeds.back().id == "triangle");

        test::TempDir d;
        write_file(d / "a.png", test::seed_image("dots"));
        write_file(d / "index.jsonl", R"({"id": "x", "path": "a.png", "source_tag": "chart"})" "\n");
        const auto indexed = engine::load_seeds(d.path());
        REQUIRE(indexed.size() == 1);
        CHECK(indexed[0].id == "x");
        CHECK(indexed[0].source_tag == "chart");

        append_line(d / "index.jsonl", R"({"id": "x", "path": "a.png"})");
        CHECK(kind_of([&] { engine::load_seeds(d.path()); }) == ErrorKind::SchemaError);
        write_file(d / "index.jsonl", R"({"id": "y", "path": "b.png"})" "\n");
        write_file(d / "b.png", "not an image");
        CHECK(kind_of([&] { engine::load_seeds(d.path()); }) == ErrorKind::SchemaError);
    }

    TEST_CASE("reproduce keeps the caption and renders the code") {
        llm::MockScript s;
        script_seed(s, "triangle", {});
        test::MockGateway mg(s);
        engine::Engine e(mg.gateway, test::shared_sandbox(), config(1));
        const auto pair = e.reproduce(seed("triangle"));
        CHECK(pair.id == "ir-triangle");
        CHECK(pair.pipeline == Pipeline::IR);
        CHECK(pair.lineage == "triangle");
        CHECK(pair.caption == "Caption of triangle");
        CHECK(pair.repairs == 0);
        CHECK(looks_like_image(pair.image));

        // The code-generation call sees the caption and the seed.
        for (const auto& c : mg.mock->calls()) {
            if (c.task != "code_gen") continue;
            CHECK(c.prompt.find("Caption of triangle") != std::string::npos);
            CHECK(c.images == std::vector<std::string>{test::seed_image("triangle")});
        }

        sandbox::ExecutionRequest req;
        req.guest_script = pair.code;
        req.trace_enabled = true;
        const auto traced = test::shared_sandbox().trace_execute(req);
        REQUIRE(traced.trace);
        std::size_t triangles = 0;
        for (const auto& entry : traced.trace->entries) {
            if (entry.kind == "polygon" && entry.attributes.value("n_vertices", 0) == 3) ++triangles;
        }
        CHECK(traced.trace->count("polygon") == 1);
        CHECK(triangles == 1);
    }

    TEST_CASE("reproduce failure kinds") {
        llm::MockScript broken;
        broken.add_rule(test::rule("caption", {test::reply("desc")}));
        broken.add_rule(test::rule("code_gen", {test::reply(test::fenced(test::kCrashCode))}));
        broken.add_rule(test::rule("repair", {test::reply(test::fenced(test::kCrashCode))}));
        test::MockGateway mg(broken);
        engine::Engine e(mg.gateway, test::shared_sandbox(), config(1));
        CHECK(kind_of([&] { e.reproduce(seed("dots")); }) == ErrorKind::RenderFailure);
        CHECK(mg.mock->call_count("repair") == 2);

        llm::MockScript refusing;
        refusing.add_rule(test::rule("caption", {test::refusal()}));
        test::MockGateway mr(refusing);
        engine::Engine er(mr.gateway, test::shared_sandbox(), config(1));
        CHECK(kind_of([&] { er.reproduce(seed("dots")); }) == ErrorKind::GenerationFailure);

        llm::MockScript prose;
        prose.add_rule(test::rule("caption", {test::reply("desc")}));
        prose.add_rule(test::rule("code_gen", {test::reply("no code today")}));
        test::MockGateway mp(prose);
        engine::Engine ep(mp.gateway, test::shared_sandbox(), config(1));
        CHECK(kind_of([&] { ep.reproduce(seed("dots")); }) == ErrorKind::GenerationFailure);
    }

    TEST_CASE("diversify returns only renderable variants") {
        llm::MockScript s;
        script_seed(s, "grid", {test::plot_code("1"), test::kCrashCode, test::plot_code("3"), test::kCrashCode,
                                test::plot_code("5")});
        s.add_rule(test::rule("repair", {test::reply("still thinking")}));
        test::MockGateway mg(s);
        engine::Engine e(mg.gateway, test::shared_sandbox(), config(5, 1));
        const auto d = e.diversify(seed("grid"), 5);
        CHECK(d.principle == "Principle for grid");
        REQUIRE(d.pairs.size() == 3);
        CHECK(d.pairs[0].diversity_index == 1);
        CHECK(d.pairs[1].diversity_index == 3);
        CHECK(d.pairs[2].diversity_index == 5);
        CHECK(d.pairs[2].id == "id-grid-5");
        REQUIRE(d.rejections.size() == 2);
        CHECK(d.rejections[0].diversity_index == 2);
        CHECK(d.rejections[0].stage == "render");
        CHECK(d.rejections[1].diversity_index == 4);

        // The variant request is text-only and carries K.
        for (const auto& c : mg.mock->calls()) {
            if (c.task != "diversify") continue;
            CHECK(c.images.empty());
            CHECK(c.prompt.find("Principle for grid") != std::string::npos);
        }
    }

    TEST_CASE("diversify with fewer blocks than requested and K=1") {
        llm::MockScript s;
        script_seed(s, "bars", {test::plot_code("1")});
        test::MockGateway mg(s);
        engine::Engine e(mg.gateway, test::shared_sandbox(), config(3));
        const auto d = e.diversify(seed("bars"), 3);
        CHECK(d.pairs.size() == 1);
        CHECK(d.rejections.size() == 2);
        CHECK(d.rejections[0].stage == "generation");

        const auto one = e.diversify(seed("bars"), 1);
        REQUIRE(one.pairs.size() == 1);
        CHECK(one.pairs[0].diversity_index == 1);
        CHECK(one.pairs[0].principle == "Principle for bars");
        CHECK(kind_of([&] { e.diversify(seed("bars"), 0); }) == ErrorKind::PreconditionViolation);

        llm::MockScript refusing;
        refusing.add_rule(test::rule("principle", {test::refusal()}));
        test::MockGateway mr(refusing);
        engine::Engine er(mr.gateway, test::shared_sandbox(), config(3));
        CHECK(kind_of([&] { er.diversify(seed("bars"), 3); }) == ErrorKind::PrincipleFailure);
    }

    TEST_CASE("quality gate conjunction and short-circuit") {
        struct Case {
            std::string code, image, consistency;
            bool passed;
            std::size_t image_calls, consistency_calls;
        };
        const std::vector<Case> cases = {
            {test::kQualified, test::kPass, test::kMatch, true, 1, 1},
            {test::kDisqualified, test::kPass, test::kMatch, false, 0, 0},
            {test::kQualified, test::kFail, test::kMatch, false, 1, 0},
            {test::kQualified, test::kPass, test::kMismatch, false, 1, 1},
        };
        for (const auto& c : cases) {
            llm::MockScript s;
            s.add_rule(test::rule("q_code", {test::reply(c.code)}));
            s.add_rule(test::rule("q_image", {test::reply(c.image)}));
            s.add_rule(test::rule("q_consistency", {test::reply(c.consistency)}));
            test::MockGateway mg(s);
            engine::Engine e(mg.gateway, test::shared_sandbox(), config(1));
            const auto r = e.quality_gate(bare_pair("p"));
            CHECK(r.passed == c.passed);
            CHECK(mg.mock->call_count("q_code") == 1);
            CHECK(mg.mock->call_count("q_image") == c.image_calls);
            CHECK(mg.mock->call_count("q_consistency") == c.consistency_calls);
            CHECK(r.q_image.has_value() == (c.image_calls == 1));
            CHECK(r.q_consistency.has_value() == (c.consistency_calls == 1));
        }
    }

    TEST_CASE("judge calls carry the right modality") {
        llm::MockScript s;
        positive_judges(s);
        test::MockGateway mg(s);
        engine::Engine e(mg.gateway, test::shared_sandbox(), config(1));
        const auto p = bare_pair("p");
        e.quality_gate(p);
        for (const auto& c : mg.mock->calls()) {
            if (c.task == "q_code") {
                CHECK(c.images.empty());
                CHECK(c.prompt.find(p.code) != std::string::npos);
            } else if (c.task == "q_image") {
                CHECK(c.images == std::vector<std::string>{p.image});
            } else {
                CHECK(c.images == std::vector<std::string>{p.image});
                CHECK(c.prompt.find(p.code) != std::string::npos);
            }
        }
    }

    TEST_CASE("unavailable or unparseable judges leave pairs undecided") {
        llm::MockScript s;
        s.add_rule(test::rule("q_code", {test::reply(test::kQualified)}));
        s.add_rule(test::rule("q_image", {test::unavailable()}, {}, sha256_hex("img-b")));
        s.add_rule(test::rule("q_image", {test::reply("I am not sure.")}, {}, sha256_hex("img-c")));
        s.add_rule(test::rule("q_image", {test::reply(test::kPass)}));
        s.add_rule(test::rule("q_consistency", {test::reply(test::kMatch)}));
        test::MockGateway mg(s);
        engine::Engine e(mg.gateway, test::shared_sandbox(), config(1));
        auto a = bare_pair("a");
        auto b = bare_pair("b");
        b.image = "img-b";
        auto c = bare_pair("c");
        c.image = "img-c";
        CHECK(kind_of([&] { e.quality_gate(b); }) == ErrorKind::JudgeUnavailable);
        const auto f = e.filter({a, b, c});
        CHECK(f.passed == std::vector<std::string>{"a"});
        CHECK(f.rejected.empty());
        CHECK(f.undecided == std::vector<std::string>{"b", "c"});
    }

    TEST_CASE("run merges pipelines, resumes and is reproducible") {
        test::TempDir seeds_dir, out1, out2;
        for (const char* n : {"circles", "dots"}) write_file(seeds_dir / (std::string(n) + ".png"), test::seed_image(n));
        const auto seeds = engine::load_seeds(seeds_dir.path());

        auto make_script = [] {
            llm::MockScript s;
            script_seed(s, "circles", {test::plot_code("11"), test::plot_code("12")});
            // Second variant duplicates the seed's own reproduction.
            script_seed(s, "dots", {test::plot_code("21"), seed_script("dots")});
            positive_judges(s);
            return s;
        };
        auto cfg = config(2);
        cfg.sg_count = 2;
        cfg.sg_seed = 5;

        test::MockGateway mg(make_script());
        engine::Engine e(mg.gateway, test::shared_sandbox(), cfg);
        const auto summary = e.run(seeds, out1.path());
        CHECK(summary.ir == 2);
        CHECK(summary.id == 3);
        CHECK(summary.sg == 2);
        CHECK(summary.duplicates == 1);
        CHECK(summary.rejected == 1);
        CHECK(summary.undecided == 0);

        const auto dataset = engine::load_dataset(out1.path());
        REQUIRE(dataset.size() == 7);
        std::set<std::string> lineages;
        for (const auto& entry : dataset) {
            CHECK(entry.quality.passed);
            CHECK(looks_like_image(entry.pair.image));
            lineages.insert(entry.pair.lineage);
            if (entry.pair.pipeline == Pipeline::SG) {
                CHECK_NOTHROW(geometry::TemplateRegistry::builtin().get(entry.pair.lineage));
            } else {
                CHECK((entry.pair.lineage == "circles" || entry.pair.lineage == "dots"));
            }
        }
        const auto rejections = read_jsonl(out1 / "rejections.jsonl");
        REQUIRE(rejections.size() == 1);
        CHECK(rejections[0]["id"] == "id-dots-2");
        CHECK(rejections[0]["stage"] == "dedup");
        const json s = json::parse(read_file(out1 / "summary.json"));
        CHECK(s["counts"]["total"] == 7);

        // Resume in place: nothing is regenerated or re-judged.
        test::MockGateway again(make_script());
        engine::Engine e2(again.gateway, test::shared_sandbox(), cfg);
        const std::string manifest = read_file(out1 / "manifest.jsonl");
        const auto resumed = e2.run(seeds, out1.path());
        CHECK(again.mock->calls().empty());
        CHECK(resumed.resumed_units == 5);
        CHECK(read_file(out1 / "manifest.jsonl") == manifest);

        // A fresh run in mock mode reproduces the manifest byte for byte.
        test::MockGateway fresh(make_script());
        engine::Engine e3(fresh.gateway, test::shared_sandbox(), cfg);
        e3.run(seeds, out2.path());
        CHECK(read_file(out2 / "manifest.jsonl") == manifest);
    }

    TEST_CASE("undecided pairs are retried on the next run") {
        test::TempDir out;
        const std::vector<engine::SeedImage> seeds = {seed("bars")};
        auto cfg = config(1);
        cfg.run_id = false;

        llm::MockScript down;
        script_seed(down, "bars", {});
        down.add_rule(test::rule("q_code", {test::unavailable()}));
        test::MockGateway m1(down);
        const auto first = engine::Engine(m1.gateway, test::shared_sandbox(), cfg).run(seeds, out.path());
        CHECK(first.undecided == 1);
        CHECK(first.ir == 0);
        CHECK(read_jsonl(out / "rejections.jsonl")[0]["stage"] == "undecided");

        llm::MockScript up;
        script_seed(up, "bars", {});
        positive_judges(up);
        test::MockGateway m2(up);
        const auto second = engine::Engine(m2.gateway, test::shared_sandbox(), cfg).run(seeds, out.path());
        CHECK(second.undecided == 0);
        CHECK(second.ir == 1);
        CHECK(m2.mock->call_count("caption") == 0);
        CHECK(m2.mock->call_count("q_code") == 1);
    }

    TEST_CASE("SG-only run and preconditions") {
        test::TempDir out;
        llm::MockScript s;
        positive_judges(s);
        test::MockGateway mg(s);
        auto cfg = config(1);
        cfg.sg_count = 2;
        const auto summary = engine::Engine(mg.gateway, test::shared_sandbox(), cfg).run({}, out.path());
        CHECK(summary.sg == 2);
        CHECK(summary.ir + summary.id == 0);
        for (const auto& entry : engine::load_dataset(out.path())) CHECK(entry.pair.pipeline == Pipeline::SG);

        cfg.sg_count = 0;
        CHECK(kind_of([&] { engine::Engine(mg.gateway, test::shared_sandbox(), cfg).run({}, out.path()); }) ==
              ErrorKind::PreconditionViolation);
        CHECK(kind_of([&] { engine::Engine(mg.gateway, test::shared_sandbox(), config(0)); }) ==
              ErrorKind::PreconditionViolation);
    }

    TEST_CASE("code fingerprint ignores whitespace layout only") {
        CHECK(engine::code_fingerprint("a = 1\n\nb = 2\n") == engine::code_fingerprint("a = 1\nb = 2"));
        CHECK(engine::code_fingerprint("a = 1") != engine::code_fingerprint("a = 2"));
    }
}
