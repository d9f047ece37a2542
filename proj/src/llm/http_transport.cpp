#include <atomic>

#include <httplib.h>

#include "forge/llm.hpp"

namespace forge::llm {

namespace {

std::atomic<std::size_t> g_connection_attempts{0};

class HttplibTransport final : public HttpTransport {
public:
    HttpResponse post_json(const std::string& url, const std::map<std::string, std::string>& headers,
                           const std::string& body, Millis timeout) override {
        const std::size_t scheme_end = url.find("://");
        if (scheme_end == std::string::npos) return {0, {}, "malformed url: " + url};
        const std::size_t path_begin = url.find('/', scheme_end + 3);
        const std::string origin = url.substr(0, path_begin);
        const std::string path = path_begin == std::string::npos ? "/" : url.substr(path_begin);

        ++g_connection_attempts;
        httplib::Client client(origin);
        const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout).count();
        client.set_connection_timeout(static_cast<time_t>(std::max<long long>(1, secs)));
        client.set_read_timeout(static_cast<time_t>(std::max<long long>(1, secs)));
        client.set_write_timeout(static_cast<time_t>(std::max<long long>(1, secs)));

        httplib::Headers h;
        for (const auto& [k, v] : headers) h.emplace(k, v);
        auto res = client.Post(path, h, body, "application/json");
        if (!res) return {0, {}, httplib::to_string(res.error())};
        return {res->status, res->body, {}};
    }
};

}  // namespace

std::shared_ptr<HttpTransport> make_http_transport() {
    return std::make_shared<HttplibTransport>();
}

std::size_t network_connection_attempts() {
    return g_connection_attempts.load();
}

}  // namespace forge::llm
