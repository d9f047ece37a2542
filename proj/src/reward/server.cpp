#include <httplib.h>

#include <spdlog/spdlog.h>

#include "forge/reward.hpp"

namespace forge::reward {

struct ServerHandle {
    httplib::Server http;
};

namespace {

void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, const std::string& kind, const std::string& message) {
    reply(res, status, {{"error", kind}, {"message", message}});
}

// Runs a handler, mapping malformed bodies to 400 and domain errors to 4xx/5xx.
template <typename F>
void guarded(httplib::Response& res, F&& fn) {
    try {
        fn();
    } catch (const json::exception& e) {
        reply_error(res, 400, "SchemaError", e.what());
    } catch (const Error& e) {
        const int status = e.kind() == ErrorKind::UnknownSample ? 404
                           : e.kind() == ErrorKind::EmptyGroup || e.kind() == ErrorKind::SchemaError ? 400
                                                                                                       : 500;
        reply_error(res, status, std::string(to_string(e.kind())), e.what());
    }
}

}  // namespace

RewardServer::RewardServer(RewardService& service, const ReferenceStore& store, StdKind std_kind)
    : server_(std::make_unique<ServerHandle>()), service_(service), store_(store), std_kind_(std_kind) {
    auto& http = server_->http;
    http.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
        reply(res, 200, {{"status", "ok"}, {"samples", store_.size()}});
    });
    http.Post("/v1/reward", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const json body = json::parse(req.body);
            const Reference& ref = store_.get(body.at("sample_id").get<std::string>());
            const RewardBreakdown b =
                service_.content_reward(body.at("response").get<std::string>(), ref.code, ref.image);
            json out = to_json(b);
            out["sample_id"] = body.at("sample_id");
            reply(res, 200, out);
        });
    });
    http.Post("/v1/advantages", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const json body = json::parse(req.body);
            const StdKind kind = body.contains("std") ? std_kind_from_string(body.at("std").get<std::string>()) : std_kind_;
            reply(res, 200, {{"advantages", group_advantages(body.at("rewards").get<std::vector<double>>(), kind)}});
        });
    });
    http.Post("/v1/difficulty", [](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const json body = json::parse(req.body);
            std::vector<DifficultyGroup> groups;
            for (const auto& g : body.at("groups")) {
                DifficultyGroup dg;
                dg.query_id = g.at("query_id").get<std::string>();
                dg.successes = g.at("successes").get<std::vector<bool>>();
                groups.push_back(std::move(dg));
            }
            const double lo = body.value("lo", 0.25);
            const double hi = body.value("hi", 0.75);
            reply(res, 200, {{"kept", difficulty_filter(groups, lo, hi)}});
        });
    });
}

RewardServer::~RewardServer() { stop(); }

int RewardServer::bind(const std::string& host, int port) {
    if (port == 0) return server_->http.bind_to_any_port(host);
    if (!server_->http.bind_to_port(host, port)) {
        throw Error(ErrorKind::Io, "cannot bind " + host + ":" + std::to_string(port));
    }
    return port;
}

void RewardServer::listen() {
    spdlog::info("reward server listening");
    server_->http.listen_after_bind();
}

void RewardServer::stop() {
    if (server_) server_->http.stop();
}

}  // namespace forge::reward
