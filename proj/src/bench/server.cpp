#include <httplib.h>

#include <spdlog/spdlog.h>

#include "forge/bench.hpp"

namespace forge::bench {

struct ServerHandle {
    httplib::Server http;
};

namespace {

void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, std::string_view kind, const std::string& message) {
    reply(res, status, {{"error", kind}, {"message", message}});
}

}  // namespace

BenchServer::BenchServer(std::vector<Candidate> ranked, AnnotationStore& store, QueueOptions options)
    : candidates_(std::move(ranked)), store_(store), options_(std::move(options)),
      server_(std::make_unique<ServerHandle>()) {
    if (options_.assignment == Assignment::Partition && options_.annotators.empty()) {
        throw Error(ErrorKind::PreconditionViolation, "partition assignment needs an annotator list");
    }
    for (std::size_t i = 0; i < candidates_.size(); ++i) index_[candidates_[i].id] = i;

    auto& http = server_->http;
    http.Get("/healthz", [](const httplib::Request&, httplib::Response& res) { reply(res, 200, {{"status", "ok"}}); });

    http.Get("/v1/queue/next", [this](const httplib::Request& req, httplib::Response& res) {
        const std::string annotator = req.get_param_value("annotator");
        if (annotator.empty()) return reply_error(res, 400, "SchemaError", "annotator parameter is required");
        if (options_.assignment == Assignment::Partition &&
            std::find(options_.annotators.begin(), options_.annotators.end(), annotator) == options_.annotators.end()) {
            return reply_error(res, 403, "PreconditionViolation", "unknown annotator " + annotator);
        }
        const auto id = next_for(annotator);
        json p = {{"annotated", store_.count_by(annotator)}};
        if (!id) return reply(res, 200, {{"done", true}, {"progress", p}});
        const Candidate& c = candidates_[index_.at(*id)];
        reply(res, 200,
              {{"done", false},
               {"candidate_id", c.id},
               {"code", c.code},
               {"original_image_url", "/v1/images/" + c.id + "/original"},
               {"rendered_image_url", "/v1/images/" + c.id + "/rendered"},
               {"final_score", c.final_score},
               {"iterations_used", c.iterations_used},
               {"progress", p}});
    });

    http.Post("/v1/annotations", [this](const httplib::Request& req, httplib::Response& res) {
        Annotation a;
        try {
            a = annotation_from_json(json::parse(req.body));
        } catch (const json::exception& e) {
            return reply_error(res, 400, "SchemaError", e.what());
        } catch (const Error& e) {
            return reply_error(res, 400, to_string(e.kind()), e.what());
        }
        if (!index_.count(a.candidate_id)) {
            return reply_error(res, 404, "UnknownSample", "unknown candidate " + a.candidate_id);
        }
        try {
            const bool updated = store_.submit(a);
            {
                std::lock_guard lock(mu_);
                leases_.erase({a.annotator_id, a.candidate_id});
            }
            reply(res, updated ? 200 : 201,
                  {{"status", updated ? "updated" : "created"}, {"candidate_id", a.candidate_id}});
        } catch (const Error& e) {
            reply_error(res, e.kind() == ErrorKind::RangeViolation ? 400 : 500, to_string(e.kind()), e.what());
        }
    });

    http.Get("/v1/progress", [this](const httplib::Request&, httplib::Response& res) { reply(res, 200, progress()); });

    http.Get(R"(/v1/images/([^/]+)/(original|rendered))", [this](const httplib::Request& req, httplib::Response& res) {
        auto it = index_.find(req.matches[1].str());
        if (it == index_.end()) return reply_error(res, 404, "UnknownSample", "unknown candidate");
        const Candidate& c = candidates_[it->second];
        const std::string& bytes = req.matches[2].str() == "original" ? c.image : c.rendered;
        res.set_content(bytes, "image/png");
    });
}

BenchServer::~BenchServer() { stop(); }

bool BenchServer::assigned(const std::string& annotator, std::size_t index) const {
    if (options_.assignment == Assignment::All) return true;
    const auto& list = options_.annotators;
    return list[index % list.size()] == annotator;
}

std::optional<std::string> BenchServer::next_for(const std::string& annotator) {
    const auto now = std::chrono::steady_clock::now();
    std::lock_guard lock(mu_);
    for (std::size_t i = 0; i < candidates_.size(); ++i) {
        const std::string& id = candidates_[i].id;
        if (!assigned(annotator, i) || store_.has(annotator, id)) continue;
        auto lease = leases_.find({annotator, id});
        if (lease != leases_.end() && lease->second > now) continue;
        leases_[{annotator, id}] = now + options_.lease;
        return id;
    }
    return std::nullopt;
}

json BenchServer::progress() const {
    const auto aggregates = store_.aggregates();
    json per = json::object();
    std::set<std::string> annotators;
    for (const auto& a : store_.all()) annotators.insert(a.annotator_id);
    for (const auto& name : options_.annotators) annotators.insert(name);
    for (const auto& name : annotators) {
        std::size_t total = 0;
        for (std::size_t i = 0; i < candidates_.size(); ++i) total += assigned(name, i);
        per[name] = {{"annotated", store_.count_by(name)}, {"assigned", total}};
    }
    json agg = json::object();
    for (const auto& [id, a] : aggregates) agg[id] = {{"mean", a.mean}, {"annotators", a.annotators}};
    return {{"candidates", candidates_.size()},
            {"annotated_candidates", aggregates.size()},
            {"annotations", store_.all().size()},
            {"assignment", options_.assignment == Assignment::All ? "all" : "partition"},
            {"annotators", per},
            {"aggregates", agg}};
}

int BenchServer::bind(const std::string& host, int port) {
    if (port == 0) return server_->http.bind_to_any_port(host);
    if (!server_->http.bind_to_port(host, port)) {
        throw Error(ErrorKind::Io, "cannot bind " + host + ":" + std::to_string(port));
    }
    return port;
}

void BenchServer::listen() {
    spdlog::info("bench queue server listening");
    server_->http.listen_after_bind();
}

void BenchServer::stop() {
    if (server_) server_->http.stop();
}

}  // namespace forge::bench
