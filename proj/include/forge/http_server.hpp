#pragma once

#include <atomic>
#include <memory>
#include <stdexcept>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "forge/toolserver.hpp"

namespace forge {

inline int http_status_for(const ClientError& e, bool browse) {
    switch (e.kind) {
        case ClientError::Kind::malformed_response: return 400;
        case ClientError::Kind::timeout: return 504;
        case ClientError::Kind::rate_limited: return 429;
        case ClientError::Kind::unavailable: return browse ? 404 : 503;
    }
    return 500;
}

namespace detail {

inline void reply_json(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

inline void reply_error(httplib::Response& res, int status, const std::string& message) {
    reply_json(res, status, {{"error", message}});
}

}  // namespace detail

/// Mounts /search, /browse, /healthz, and /stats on an httplib server.
/// Exposed separately from ToolHttpServer so tests can mount the routes on a
/// server they control.
inline void install_tool_routes(httplib::Server& server, std::shared_ptr<ToolService> service) {
    server.Post("/search", [service](const httplib::Request& req, httplib::Response& res) {
        nlohmann::json body = nlohmann::json::parse(req.body, nullptr, false);
        if (body.is_discarded() || !body.is_object() || !body.contains("query") ||
            !body["query"].is_string()) {
            detail::reply_error(res, 400, "body must be a JSON object with a string \"query\"");
            return;
        }
        SearchRequest sr;
        sr.query = body["query"].get<std::string>();
        if (body.contains("region_lang") && body["region_lang"].is_string())
            sr.region_lang = body["region_lang"].get<std::string>();
        auto result = service->handle_search(sr);
        if (!result.ok()) {
            detail::reply_error(res, http_status_for(result.error(), false),
                                result.error().detail);
            return;
        }
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& r : result.value()) arr.push_back(wire::snippet_result_to_json(r));
        detail::reply_json(res, 200, arr);
    });

    server.Post("/browse", [service](const httplib::Request& req, httplib::Response& res) {
        nlohmann::json body = nlohmann::json::parse(req.body, nullptr, false);
        if (body.is_discarded() || !body.is_object() || !body.contains("url") ||
            !body["url"].is_string()) {
            detail::reply_error(res, 400, "body must be a JSON object with a string \"url\"");
            return;
        }
        auto result = service->handle_browse({body["url"].get<std::string>()});
        if (!result.ok()) {
            detail::reply_error(res, http_status_for(result.error(), true),
                                result.error().detail);
            return;
        }
        detail::reply_json(res, 200, wire::browse_result_to_json(result.value()));
    });

    server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
        detail::reply_json(res, 200, {{"status", "ok"}});
    });

    server.Get("/stats", [service](const httplib::Request&, httplib::Response& res) {
        auto cache = service->cache_stats();
        auto lanes = service->lane_stats();
        nlohmann::json body = {
            {"cache",
             {{"hits", cache.hits},
              {"misses", cache.misses},
              {"puts", cache.puts},
              {"hit_rate", cache.hit_rate()},
              {"hits_by_namespace", cache.hits_by_namespace},
              {"misses_by_namespace", cache.misses_by_namespace}}},
            {"lanes",
             {{"fast", lanes.fast},
              {"standard", lanes.standard},
              {"fast_share", lanes.fast_share()}}}};
        detail::reply_json(res, 200, body);
    });
}

/// Owns an httplib server running on a background thread. Binds to an
/// ephemeral port when constructed with port 0, which is what the tests use.
class ToolHttpServer {
  public:
    explicit ToolHttpServer(std::shared_ptr<ToolService> service, std::string host = "127.0.0.1")
        : service_(std::move(service)), host_(std::move(host)) {
        install_tool_routes(server_, service_);
    }

    ~ToolHttpServer() { stop(); }

    /// Starts serving on a background thread. Returns the bound port.
    int start(int port = 0) {
        if (running_) throw std::logic_error("server already running");
        if (port == 0) {
            port_ = server_.bind_to_any_port(host_);
            if (port_ < 0) throw std::runtime_error("failed to bind " + host_);
        } else {
            if (!server_.bind_to_port(host_, port))
                throw std::runtime_error("failed to bind " + host_ + ":" + std::to_string(port));
            port_ = port;
        }
        running_ = true;
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
        return port_;
    }

    /// Serves on the calling thread until stop() is called from elsewhere.
    bool serve_forever(int port) {
        port_ = port;
        running_ = true;
        return server_.listen(host_, port);
    }

    void stop() {
        if (!running_) return;
        server_.stop();
        if (thread_.joinable()) thread_.join();
        running_ = false;
    }

    int port() const { return port_; }
    ToolService& service() { return *service_; }

  private:
    std::shared_ptr<ToolService> service_;
    std::string host_;
    httplib::Server server_;
    std::thread thread_;
    std::atomic<bool> running_{false};
    int port_ = -1;
};

}  // namespace forge
