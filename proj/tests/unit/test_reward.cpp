#include <doctest.h>

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

#include "forge_test.hpp"

using namespace forge;

namespace {

llm::MockScript judges(const std::string& code_reply, const std::string& image_reply) {
    llm::MockScript s;
    s.add_rule(test::rule("reward_code", {test::reply(code_reply)}));
    s.add_rule(test::rule("reward_image", {test::reply(image_reply)}));
    return s;
}

reward::RewardOptions fast() {
    reward::RewardOptions o;
    o.timeout = std::chrono::seconds(60);
    return o;
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double pop_std(const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / v.size());
}

}  // namespace

TEST_SUITE("reward") {
    TEST_CASE("format reward") {
        CHECK(reward::format_reward("```python\nprint(1)\n```") == 1);
        CHECK(reward::format_reward("just prose") == 0);
        CHECK(reward::format_reward("```py\nprint(1)\n```") == 0);
        CHECK(reward::format_reward("```\nprint(1)\n```") == 0);
    }

    TEST_CASE("combine arithmetic and gating") {
        const auto a = reward::combine(1, 1, 0.8, 0.9);
        CHECK(a.r_total == doctest::Approx(3.7).epsilon(1e-12));
        const auto b = reward::combine(1, 0, 0.5, 0.7);
        CHECK(b.r_image == 0.0);
        CHECK(b.r_total == 1.5);
        CHECK(reward::combine(0, 0, 0, 0).r_total == 0.0);
    }

    TEST_CASE("content reward follows the breakdown examples") {
        test::MockGateway mg(judges("Score: 80", "Score: 90"));
        reward::RewardService svc(mg.gateway, test::shared_sandbox(), fast());
        const auto ok = svc.content_reward(test::fenced(test::plot_code("1")), "ref", test::seed_image("dots"));
        CHECK(ok.r_fmt == 1.0);
        CHECK(ok.r_exec == 1.0);
        CHECK(ok.r_code == doctest::Approx(0.8));
        CHECK(ok.r_image == doctest::Approx(0.9));
        CHECK(ok.r_total == doctest::Approx(3.7));
        CHECK_FALSE(ok.provisional);
        CHECK(ok.exec_status == "Success");

        test::MockGateway mc(judges("Score: 50", "Score: 90"));
        reward::RewardService crash(mc.gateway, test::shared_sandbox(), fast());
        const auto bad = crash.content_reward(test::fenced(test::kCrashCode), "ref", test::seed_image("dots"));
        CHECK(bad.r_fmt == 1.0);
        CHECK(bad.r_exec == 0.0);
        CHECK(bad.r_code == doctest::Approx(0.5));
        CHECK(bad.r_image == 0.0);
        CHECK(bad.r_total == doctest::Approx(1.5));
        // The image judge is never asked about a failed execution.
        CHECK(mc.mock->call_count("reward_image") == 0);
        CHECK(mc.mock->call_count("reward_code") == 1);

        const auto none = crash.content_reward("I would draw a circle.", "ref", test::seed_image("dots"));
        CHECK(none.r_total == 0.0);
        CHECK(none.exec_status == "not_run");
        CHECK(mc.mock->call_count("reward_code") == 1);
    }

    TEST_CASE("identical requests are served from the cache") {
        test::MockGateway mg(judges("Score: 40", "Score: 60"));
        reward::RewardService svc(mg.gateway, test::shared_sandbox(), fast());
        const std::string resp = test::fenced(test::plot_code("4"));
        const auto a = svc.content_reward(resp, "ref", "img");
        const auto b = svc.content_reward(resp, "ref", "img");
        CHECK(a.r_total == b.r_total);
        CHECK(svc.computed() == 1);
        CHECK(svc.cache_size() == 1);
        svc.content_reward(resp, "other ref", "img");
        CHECK(svc.computed() == 2);
    }

    TEST_CASE("judge outage marks the reward provisional and uncached") {
        llm::MockScript s;
        s.add_rule(test::rule("reward_code", {test::unavailable(), test::unavailable(), test::reply("Score: 70")}));
        s.add_rule(test::rule("reward_image", {test::reply("Score: 20")}));
        test::MockGateway mg(s);
        reward::RewardService svc(mg.gateway, test::shared_sandbox(), fast());
        const std::string resp = test::fenced(test::plot_code("6"));
        const auto first = svc.content_reward(resp, "ref", "img");
        CHECK(first.provisional);
        CHECK(first.r_code == 0.0);
        CHECK(mg.mock->call_count("reward_code") == 2);
        CHECK(svc.cache_size() == 0);
        const auto retry = svc.content_reward(resp, "ref", "img");
        CHECK_FALSE(retry.provisional);
        CHECK(retry.r_code == doctest::Approx(0.7));
        CHECK(svc.cache_size() == 1);
    }

    TEST_CASE("group advantages") {
        const auto two = reward::group_advantages({0, 2});
        CHECK(two[0] == doctest::Approx(-1.0));
        CHECK(two[1] == doctest::Approx(1.0));
        CHECK(reward::group_advantages({1, 1, 1, 1}) == std::vector<double>{0, 0, 0, 0});
        const auto three = reward::group_advantages({1, 2, 3});
        CHECK(three[0] == doctest::Approx(-1.2247).epsilon(1e-4));
        CHECK(three[1] == doctest::Approx(0.0));
        CHECK(three[2] == doctest::Approx(1.2247).epsilon(1e-4));
        CHECK(reward::group_advantages({3.7}) == std::vector<double>{0});
        CHECK_THROWS_AS(reward::group_advantages({}), Error);

        const auto sample = reward::group_advantages({1, 2, 3}, reward::StdKind::Sample);
        CHECK(sample[0] == doctest::Approx(-1.0));
        CHECK(reward::group_advantages({5}, reward::StdKind::Sample) == std::vector<double>{0});
        CHECK(reward::std_kind_from_string("sample") == reward::StdKind::Sample);
        CHECK_THROWS_AS(reward::std_kind_from_string("unbiased"), Error);
    }

    TEST_CASE("advantage normalization and affine invariance") {
        std::mt19937_64 rng(99);
        std::uniform_real_distribution<double> val(0.0, 4.0);
        std::uniform_int_distribution<int> size(2, 16);
        for (int trial = 0; trial < 2000; ++trial) {
            std::vector<double> r(size(rng));
            for (auto& x : r) x = val(rng);
            const auto a = reward::group_advantages(r);
            CHECK(std::abs(mean(a)) < 1e-9);
            CHECK(std::abs(pop_std(a) - 1.0) < 1e-9);
            std::vector<double> t(r.size());
            const double scale = 0.1 + val(rng);
            const double shift = val(rng) - 2.0;
            for (std::size_t i = 0; i < r.size(); ++i) t[i] = scale * r[i] + shift;
            const auto b = reward::group_advantages(t);
            for (std::size_t i = 0; i < r.size(); ++i) {
                for (std::size_t j = 0; j < r.size(); ++j) {
                    if (a[i] < a[j] - 1e-9) CHECK(b[i] < b[j]);
                }
            }
        }
    }

    TEST_CASE("difficulty filter bounds are inclusive") {
        auto group = [](std::string id, int ok, int n) {
            reward::DifficultyGroup g{std::move(id), std::vector<bool>(n, false)};
            for (int i = 0; i < ok; ++i) g.successes[i] = true;
            return g;
        };
        std::vector<reward::DifficultyGroup> gs;
        for (int k = 0; k <= 8; ++k) gs.push_back(group("q" + std::to_string(k), k, 8));
        gs.push_back({"empty", {}});
        CHECK(reward::difficulty_filter(gs) == std::vector<std::string>{"q2", "q3", "q4", "q5", "q6"});
        CHECK(reward::difficulty_filter({group("a", 1, 4), group("b", 3, 4), group("c", 1, 3)}) ==
              std::vector<std::string>{"a", "b", "c"});
        CHECK(reward::difficulty_filter({group("a", 1, 5)}).empty());
    }

    TEST_CASE("reference store reads bench packages") {
        test::TempDir d;
        eval::BenchSample s;
        s.id = "s1";
        s.image = test::seed_image("dots");
        s.reference_code = "print('ref')\n";
        eval::write_bench("b", {s}, d.path());
        const auto store = reward::ReferenceStore::load(d.path());
        CHECK(store.size() == 1);
        CHECK(store.get("s1").code == "print('ref')\n");
        CHECK_THROWS_AS(store.get("s2"), Error);
        test::TempDir empty;
        CHECK_THROWS_AS(reward::ReferenceStore::load(empty.path()), Error);
    }

    TEST_CASE("http endpoints") {
        reward::ReferenceStore store;
        store.add("s1", {"print('ref')\n", test::seed_image("dots")});
        test::MockGateway mg(judges("Score: 80", "Score: 90"));
        reward::RewardService svc(mg.gateway, test::shared_sandbox(), fast());
        reward::RewardServer server(svc, store);
        const int port = server.bind("127.0.0.1", 0);
        REQUIRE(port > 0);
        std::thread t([&] { server.listen(); });

        httplib::Client cli("127.0.0.1", port);
        cli.set_read_timeout(120, 0);
        for (int i = 0; i < 100; ++i) {
            if (auto r = cli.Get("/healthz"); r && r->status == 200) break;
            std::this_thread::sleep_for(std::chrono::milliseconds(20));
        }
        auto post = [&](const char* path, const json& body) {
            auto r = cli.Post(path, body.dump(), "application/json");
            REQUIRE(r);
            return std::make_pair(r->status, json::parse(r->body));
        };

        auto [s1, b1] = post("/v1/reward", {{"sample_id", "s1"}, {"response", test::fenced(test::plot_code("8"))}});
        CHECK(s1 == 200);
        CHECK(b1["r_total"].get<double>() == doctest::Approx(3.7));
        CHECK(b1["sample_id"] == "s1");
        auto [s2, b2] = post("/v1/reward", {{"sample_id", "nope"}, {"response", "x"}});
        CHECK(s2 == 404);
        CHECK(b2["error"] == "UnknownSample");
        auto [s3, b3] = post("/v1/advantages", {{"rewards", {0, 2}}});
        CHECK(s3 == 200);
        CHECK(b3["advantages"][1].get<double>() == doctest::Approx(1.0));
        auto [s4, b4] = post("/v1/advantages", {{"rewards", json::array()}});
        CHECK(s4 == 400);
        CHECK(b4["error"] == "EmptyGroup");
        auto [s5, b5] = post("/v1/advantages", {{"rewards", {1, 2, 3}}, {"std", "sample"}});
        CHECK(b5["advantages"][0].get<double>() == doctest::Approx(-1.0));
        auto [s6, b6] = post("/v1/difficulty",
                             {{"groups", {{{"query_id", "a"}, {"successes", {true, false, true, false}}},
                                          {{"query_id", "b"}, {"successes", {true, true, true, true}}}}}});
        CHECK(s6 == 200);
        CHECK(b6["kept"] == json{"a"});
        auto bad = cli.Post("/v1/reward", "{not json", "application/json");
        REQUIRE(bad);
        CHECK(bad->status == 400);
        (void)s5;

        server.stop();
        t.join();
    }

    TEST_CASE("concurrent identical requests agree") {
        test::MockGateway mg(judges("Score: 30", "Score: 40"));
        reward::RewardService svc(mg.gateway, test::shared_sandbox(), fast());
        const std::string resp = test::fenced(test::plot_code("12"));
        std::vector<double> totals(4);
        std::vector<std::thread> ts;
        for (int i = 0; i < 4; ++i) ts.emplace_back([&, i] { totals[i] = svc.content_reward(resp, "r", "img").r_total; });
        for (auto& t : ts) t.join();
        for (double v : totals) CHECK(v == doctest::Approx(2.7));
        CHECK(svc.cache_size() == 1);
    }
}
