#include <doctest.h>

#include <httplib.h>

#include <algorithm>
#include <random>
#include <thread>

#include "forge_test.hpp"

using namespace forge;
using bench::Annotation;
using bench::Candidate;

namespace {

Candidate cand(std::string id, double score, int iters, std::string code = {}) {
    Candidate c;
    c.id = std::move(id);
    c.final_score = score;
    c.iterations_used = iters;
    c.code = code.empty() ? test::plot_code("1") : std::move(code);
    c.image = test::seed_image("dots");
    c.rendered = test::seed_image("grid");
    return c;
}

Annotation ann(std::string who, std::string what, int s, int c, int f, std::int64_t ts = 1) {
    return {std::move(who), std::move(what), s, c, f, ts};
}

std::vector<std::string> ids(const std::vector<Candidate>& cs) {
    std::vector<std::string> out;
    for (const auto& c : cs) out.push_back(c.id);
    return out;
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

TEST_SUITE("bench") {
    TEST_CASE("ranking order and tie-breaks") {
        const std::vector<Candidate> cs = {cand("b", 95, 2), cand("a", 95, 7), cand("c", 80, 10), cand("d", 95, 7)};
        CHECK(ids(bench::rank_candidates(cs, 4)) == std::vector<std::string>{"a", "d", "b", "c"});
        CHECK(ids(bench::rank_candidates(cs, 1)) == std::vector<std::string>{"a"});
        CHECK(bench::rank_candidates(cs, 0).empty());
        CHECK(kind_of([&] { bench::rank_candidates(cs, 5); }) == ErrorKind::InsufficientCandidates);

        bench::RankOptions w;
        w.mode = bench::RankMode::Weighted;
        w.score_weight = 1.0;
        w.iteration_weight = 2.0;
        // Keys: b 99, a 109, c 100, d 109.
        CHECK(ids(bench::rank_candidates(cs, 4, w)) == std::vector<std::string>{"a", "d", "c", "b"});
    }

    TEST_CASE("ranking is invariant to input order") {
        std::vector<Candidate> cs;
        std::mt19937 rng(3);
        for (int i = 0; i < 40; ++i) cs.push_back(cand("c" + std::to_string(i), 80 + rng() % 5, 1 + rng() % 3));
        const auto base = ids(bench::rank_candidates(cs, 40));
        for (int t = 0; t < 20; ++t) {
            std::shuffle(cs.begin(), cs.end(), rng);
            CHECK(ids(bench::rank_candidates(cs, 40)) == base);
        }
    }

    TEST_CASE("annotation validation and aggregation") {
        CHECK(bench::ingest_annotations({ann("u1", "x", 5, 5, 5)}).at("x").mean == 5.0);
        const auto two = bench::ingest_annotations({ann("u1", "x", 5, 5, 5), ann("u2", "x", 3, 3, 3)});
        CHECK(two.at("x").mean == 4.0);
        CHECK(two.at("x").annotators == 2);
        CHECK(kind_of([] { bench::validate(ann("u1", "x", 6, 5, 5)); }) == ErrorKind::RangeViolation);
        CHECK(kind_of([] { bench::validate(ann("u1", "x", 5, 0, 5)); }) == ErrorKind::RangeViolation);
        CHECK(kind_of([] { bench::validate(ann("", "x", 5, 5, 5)); }) == ErrorKind::RangeViolation);
        CHECK(kind_of([] { bench::ingest_annotations({ann("u1", "x", 5, 5, 6)}); }) == ErrorKind::RangeViolation);

        // Replacement: latest timestamp wins, ties go to the later submission.
        const auto replaced = bench::ingest_annotations(
            {ann("u1", "x", 1, 1, 1, 10), ann("u1", "x", 5, 5, 5, 5), ann("u1", "x", 4, 4, 4, 10)});
        CHECK(replaced.at("x").mean == 4.0);
        CHECK(replaced.at("x").annotators == 1);
        const auto mixed = bench::ingest_annotations({ann("u1", "x", 5, 4, 3), ann("u2", "x", 2, 2, 2)});
        CHECK(mixed.at("x").mean == doctest::Approx(3.0));
    }

    TEST_CASE("selection is independent of submission order") {
        std::vector<Candidate> ranked;
        for (int i = 0; i < 12; ++i) ranked.push_back(cand("c" + std::to_string(i), 90, 1));
        ranked = bench::rank_candidates(ranked, ranked.size());
        std::vector<Annotation> anns;
        std::mt19937 rng(11);
        for (int i = 0; i < 12; ++i) {
            for (const char* who : {"u1", "u2", "u3"}) {
                const int v = 1 + static_cast<int>(rng() % 5);
                anns.push_back(ann(who, "c" + std::to_string(i), v, v, 1 + static_cast<int>(rng() % 5), 100 + i));
            }
        }
        const auto base = bench::select_final(ranked, bench::ingest_annotations(anns), 5);
        for (int t = 0; t < 30; ++t) {
            std::shuffle(anns.begin(), anns.end(), rng);
            CHECK(bench::select_final(ranked, bench::ingest_annotations(anns), 5) == base);
        }
        const std::vector<Candidate> three = {cand("a", 90, 1), cand("b", 90, 1), cand("c", 90, 1)};
        const auto agg = bench::ingest_annotations({ann("u", "a", 2, 2, 2), ann("u", "b", 5, 5, 5), ann("u", "c", 4, 4, 4)});
        CHECK(bench::select_final(three, agg, 2) == std::vector<std::string>{"b", "c"});
        CHECK(kind_of([&] { bench::select_final(three, agg, 4); }) == ErrorKind::InsufficientCandidates);
        // Ties keep rank order.
        const auto tied = bench::ingest_annotations({ann("u", "a", 3, 3, 3), ann("u", "b", 3, 3, 3), ann("u", "c", 3, 3, 3)});
        CHECK(bench::select_final(three, tied, 3) == std::vector<std::string>{"a", "b", "c"});
    }

    TEST_CASE("annotation store persists and replays") {
        test::TempDir d;
        const auto log = d / "annotations.jsonl";
        {
            bench::AnnotationStore store(log);
            CHECK_FALSE(store.submit(ann("u1", "x", 5, 5, 5, 1)));
            CHECK_FALSE(store.submit(ann("u2", "x", 3, 3, 3, 2)));
            CHECK(store.submit(ann("u1", "x", 4, 4, 4, 3)));
            CHECK_THROWS_AS(store.submit(ann("u1", "y", 9, 1, 1)), Error);
            CHECK(store.has("u1", "x"));
            CHECK_FALSE(store.has("u1", "y"));
            CHECK(store.count_by("u1") == 1);
            CHECK(store.aggregates().at("x").mean == 3.5);
            store.snapshot(d / "snapshot.json");
        }
        CHECK(read_jsonl(log).size() == 3);
        bench::AnnotationStore replay(log);
        CHECK(replay.all().size() == 3);
        CHECK(replay.aggregates().at("x").mean == 3.5);
        const json snap = json::parse(read_file(d / "snapshot.json"));
        CHECK(snap.dump().find("3.5") != std::string::npos);
        // A zero timestamp is stamped on arrival.
        CHECK(replay.submit(ann("u3", "z", 2, 2, 2, 0)) == false);
        CHECK(replay.all().back().timestamp > 0);
    }

    TEST_CASE("candidates round trip") {
        test::TempDir d;
        std::vector<Candidate> cs = {cand("a", 91.5, 3), cand("b", 70, 1)};
        bench::write_candidates(cs, d.path());
        const auto back = bench::load_candidates(d.path());
        REQUIRE(back.size() == 2);
        CHECK(back[0].id == "a");
        CHECK(back[0].final_score == 91.5);
        CHECK(back[0].iterations_used == 3);
        CHECK(back[0].image == cs[0].image);
        CHECK(back[0].rendered == cs[0].rendered);
        CHECK(back[1].code == cs[1].code);
    }

    TEST_CASE("packaging re-verifies, patches and backfills") {
        test::TempDir patches, out1, out2;
        std::vector<Candidate> cs = {cand("a", 99, 2, test::plot_code("1")), cand("b", 98, 2, test::kCrashCode),
                                     cand("c", 97, 2, test::plot_code("3")), cand("d", 96, 2, test::plot_code("4"))};
        const auto ranked = bench::rank_candidates(cs, 4);
        const auto agg = bench::ingest_annotations({ann("u", "a", 5, 5, 5), ann("u", "b", 5, 5, 5),
                                                    ann("u", "c", 4, 4, 4), ann("u", "d", 3, 3, 3)});
        bench::PackageOptions opts;
        opts.name = "mini";
        opts.n = 2;
        opts.timeout = std::chrono::seconds(60);
        const auto plain = bench::package(ranked, agg, test::shared_sandbox(), opts, out1.path());
        CHECK(plain.selected == std::vector<std::string>{"a", "c"});
        CHECK(plain.skipped.count("b") == 1);
        CHECK(plain.package.samples.size() == 2);

        write_file(patches / "c.py", test::plot_code("33"));
        opts.patch_dir = patches.path();
        const auto patched = bench::package(ranked, agg, test::shared_sandbox(), opts, out2.path());
        CHECK(patched.patched == std::vector<std::string>{"c"});
        CHECK(patched.package.get("c").reference_code == test::plot_code("33"));
        CHECK(patched.package.content_hash != plain.package.content_hash);

        // Every packaged code re-executes successfully.
        const auto loaded = eval::load_bench(out2.path());
        for (const auto& s : loaded.samples) {
            sandbox::ExecutionRequest req;
            req.guest_script = s.reference_code;
            CHECK(test::shared_sandbox().execute(req).ok());
            CHECK(looks_like_image(s.image));
        }

        opts.n = 4;
        CHECK(kind_of([&] { bench::package(ranked, agg, test::shared_sandbox(), opts, out2.path()); }) ==
              ErrorKind::InsufficientCandidates);
    }

    TEST_CASE("queue assignment policies") {
        test::TempDir d;
        bench::AnnotationStore store(d / "log.jsonl");
        const std::vector<Candidate> cs = {cand("a", 90, 1), cand("b", 80, 1), cand("c", 70, 1)};
        bench::BenchServer all(cs, store);
        CHECK(all.next_for("u1") == "a");
        CHECK(all.next_for("u1") == "b");  // "a" is leased
        store.submit(ann("u1", "a", 3, 3, 3));
        CHECK(all.next_for("u1") == "c");
        CHECK(all.next_for("u2") == "a");

        test::TempDir d2;
        bench::AnnotationStore store2(d2 / "log.jsonl");
        bench::QueueOptions part;
        part.assignment = bench::Assignment::Partition;
        part.annotators = {"p", "q"};
        bench::BenchServer split(cs, store2, part);
        CHECK(split.next_for("p") == "a");
        CHECK(split.next_for("p") == "c");
        CHECK_FALSE(split.next_for("p").has_value());
        CHECK(split.next_for("q") == "b");
        const json prog = split.progress();
        CHECK(prog["annotators"]["p"]["assigned"] == 2);
        CHECK(prog["annotators"]["q"]["assigned"] == 1);
    }

    TEST_CASE("annotation HTTP flow") {
        test::TempDir d;
        bench::AnnotationStore store(d / "log.jsonl");
        const std::vector<Candidate> cs = {cand("a", 90, 1), cand("b", 80, 1)};
        bench::BenchServer server(cs, store);
        const int port = server.bind("127.0.0.1", 0);
        REQUIRE(port > 0);
        std::thread t([&] { server.listen(); });
        httplib::Client cli("127.0.0.1", port);
        for (int i = 0; i < 100; ++i) {
            if (auto r = cli.Get("/healthz"); r && r->status == 200) break;
            std::this_thread::sleep_for(std::chrono::milliseconds(20));
        }

        auto next = cli.Get("/v1/queue/next?annotator=u1");
        REQUIRE(next);
        CHECK(next->status == 200);
        const json n = json::parse(next->body);
        CHECK(n["done"] == false);
        CHECK(n["candidate_id"] == "a");
        CHECK(n["code"] == cs[0].code);
        auto img = cli.Get(n["original_image_url"].get<std::string>());
        REQUIRE(img);
        CHECK(img->body == cs[0].image);
        auto rendered = cli.Get(n["rendered_image_url"].get<std::string>());
        REQUIRE(rendered);
        CHECK(rendered->body == cs[0].rendered);
        CHECK(cli.Get("/v1/images/zzz/original")->status == 404);
        CHECK(cli.Get("/v1/queue/next")->status == 400);

        auto post = [&](const json& body) { return cli.Post("/v1/annotations", body.dump(), "application/json"); };
        const json good = {{"annotator_id", "u1"}, {"candidate_id", "a"}, {"style", 5}, {"content", 4}, {"functionality", 3}};
        CHECK(post(good)->status == 201);
        CHECK(post(good)->status == 200);
        json out_of_range = good;
        out_of_range["style"] = 6;
        auto bad = post(out_of_range);
        CHECK(bad->status == 400);
        CHECK(json::parse(bad->body)["error"] == "RangeViolation");
        json unknown = good;
        unknown["candidate_id"] = "nope";
        CHECK(post(unknown)->status == 404);
        CHECK(cli.Post("/v1/annotations", "{", "application/json")->status == 400);

        const json prog = json::parse(cli.Get("/v1/progress")->body);
        CHECK(prog["annotations"] == 2);
        CHECK(prog["annotated_candidates"] == 1);
        CHECK(prog["aggregates"]["a"]["mean"].get<double>() == doctest::Approx(4.0));

        CHECK(json::parse(cli.Get("/v1/queue/next?annotator=u1")->body)["candidate_id"] == "b");
        post({{"annotator_id", "u1"}, {"candidate_id", "b"}, {"style", 1}, {"content", 1}, {"functionality", 1}});
        CHECK(json::parse(cli.Get("/v1/queue/next?annotator=u1")->body)["done"] == true);

        server.stop();
        t.join();
    }
}
