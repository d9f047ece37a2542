#include <doctest.h>

#include <iostream>
#include <sstream>

#include "forge_test.hpp"

using namespace forge;

namespace {

struct CliRun {
    int code = 0;
    std::string out;
};

CliRun run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "forge");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    std::ostringstream buf;
    auto* old = std::cout.rdbuf(buf.rdbuf());
    const int code = cli::run(static_cast<int>(argv.size()), argv.data());
    std::cout.rdbuf(old);
    return {code, buf.str()};
}

ErrorKind config_error(const json& j) {
    try {
        cli::config_from_json(j);
    } catch (const Error& e) {
        return e.kind();
    }
    return ErrorKind::Io;
}

}  // namespace

TEST_SUITE("cli") {
    TEST_CASE("empty configuration yields the defaults") {
        test::TempDir d;
        write_file(d / "empty.json", "");
        const auto c = cli::load_config(d / "empty.json");
        CHECK(c.engine.k == 5);
        CHECK(c.engine.max_repairs == 2);
        CHECK(c.agent.max_iterations == 10);
        CHECK(c.agent.threshold == 90);
        CHECK(c.sandbox.timeout_s == 120);
        CHECK(c.reward.std_kind == "population");
        CHECK(cli::timeout_of(c) == sandbox::Millis(120000));
        CHECK(cli::to_json(c) == cli::to_json(cli::config_from_json(json::object())));
        CHECK_THROWS_AS(cli::load_config(d / "absent.json"), Error);
        write_file(d / "bad.json", "{ not json");
        CHECK(config_error(json::parse("{}")) == ErrorKind::Io);
        CHECK_THROWS_AS(cli::load_config(d / "bad.json"), Error);
    }

    TEST_CASE("overrides and validation") {
        const auto c = cli::config_from_json({{"sandbox", {{"timeout_s", 60}}}, {"engine", {{"k", 3}}}});
        CHECK(cli::timeout_of(c) == sandbox::Millis(60000));
        CHECK(cli::engine_config(c).k == 3);
        CHECK(cli::engine_config(c).timeout == sandbox::Millis(60000));
        CHECK(config_error({{"engine", {{"k", 0}}}}) == ErrorKind::SchemaError);
        CHECK(config_error({{"engine", {{"bogus", 1}}}}) == ErrorKind::SchemaError);
        CHECK(config_error({{"nonsense", true}}) == ErrorKind::SchemaError);
        CHECK(config_error({{"agent", {{"threshold", 101}}}}) == ErrorKind::SchemaError);
        CHECK(config_error({{"engine", {{"k", "five"}}}}) == ErrorKind::SchemaError);
        CHECK(config_error({{"reward", {{"std", "median"}}}}) == ErrorKind::SchemaError);
        CHECK(config_error({{"bench", {{"assignment", "partition"}}}}) == ErrorKind::SchemaError);
        CHECK(config_error({{"routing", {{"caption", "nowhere"}}}}) == ErrorKind::SchemaError);
        CHECK(cli::config_from_json({{"reward", {{"std", "sample"}}}}).reward.std_kind == "sample");
        const auto q = cli::queue_options(
            cli::config_from_json({{"bench", {{"assignment", "partition"}, {"annotators", {"a", "b"}}}}}));
        CHECK(q.assignment == bench::Assignment::Partition);
        CHECK(q.annotators.size() == 2);
        try {
            cli::config_from_json({{"engine", {{"k", 0}}}});
        } catch (const Error& e) {
            CHECK(std::string(e.what()).find("engine.k") != std::string::npos);
        }
    }

    TEST_CASE("mock mode never attaches network providers") {
        const json j = {{"mock_mode", true},
                        {"providers", {{"claude", {{"kind", "openai"}, {"endpoint_url", "http://127.0.0.1:9"},
                                                   {"model_name", "m"}, {"auth_env_var", "FORGE_TEST_UNSET_KEY"}}}}},
                        {"routing", {{"caption", "claude"}}}};
        const auto c = cli::config_from_json(j);
        auto gw = cli::make_gateway(c);
        CHECK(gw->mock_mode());
        const auto before = llm::network_connection_attempts();
        CHECK_THROWS_AS(gw->complete("caption", "describe"), Error);
        CHECK(llm::network_connection_attempts() == before);
    }

    TEST_CASE("exit codes and output") {
        CHECK(run_cli({"frobnicate"}).code == 2);
        CHECK(run_cli({"--config", "/nonexistent/forge.json", "config"}).code == 1);
        const auto cfg = run_cli({"config"});
        REQUIRE(cfg.code == 0);
        CHECK(json::parse(cfg.out)["engine"]["k"] == 5);
        const auto rendered = run_cli({"prompt", "render", "repair", "--set", "code=x = 1", "--set", "error=Boom"});
        CHECK(rendered.code == 0);
        CHECK(rendered.out.find("Boom") != std::string::npos);
        CHECK(run_cli({"prompt", "render", "repair"}).code == 1);
    }

    TEST_CASE("SG-only engine run through the CLI") {
        test::TempDir d;
        const json script = {{"rules",
                              {{{"task", "q_code"}, {"reply", test::kQualified}},
                               {{"task", "q_image"}, {"reply", test::kPass}},
                               {{"task", "q_consistency"}, {"reply", test::kMatch}}}}};
        write_file(d / "mock.json", script.dump());
        write_file(d / "forge.json", json({{"mock_mode", true}, {"mock_script", (d / "mock.json").string()}}).dump());
        const auto r = run_cli({"--config", (d / "forge.json").string(), "engine", "run", "--out",
                                (d / "out").string(), "--sg-count", "2", "--sg-seed", "5"});
        INFO(r.out);
        REQUIRE(r.code == 0);
        const json summary = json::parse(r.out);
        CHECK(summary["counts"]["SG"] == 2);
        CHECK(summary["counts"]["IR"] == 0);
        CHECK(read_jsonl(d / "out" / "manifest.jsonl").size() == 2);
        CHECK(run_cli({"--config", (d / "forge.json").string(), "engine", "run", "--out", (d / "empty").string()})
                  .code == 1);
    }
}
