#pragma once

#include "cloakcatch/json_io.hpp"
#include "cloakcatch/urlnorm.hpp"
#include "cloakcatch/server/clock.hpp"
#include "cloakcatch/server/scheduler.hpp"

#include <httplib.h>

#include <stdexcept>
#include <string>
#include <thread>

namespace cloakcatch::server {

/// JSON-over-HTTP front end:
///
///   GET  /v1/swm?url=<raw-url>     200 model | 202 {"status":"pending"} | 200 {"listed":"black"|"white"}
///   PUT  /v1/lists/{black|white}   body {"url": "..."}  -> 204
///   POST /v1/reports               body: a verdict      -> 201 {"id": n}
///   GET  /v1/params                detection params clients should use
///   GET  /v1/health
class ApiServer {
public:
    ApiServer(CrawlService& service, const Clock& clock) : service_(service), clock_(clock) { install_routes(); }

    ApiServer(const ApiServer&) = delete;
    ApiServer& operator=(const ApiServer&) = delete;

    ~ApiServer() { stop(); }

    /// Binds the listening socket; port 0 picks a free port. Returns the bound port.
    int bind(const std::string& host, int port)
    {
        if (port == 0) {
            port_ = http_.bind_to_any_port(host);
            if (port_ < 0) throw std::runtime_error("cannot bind " + host + " to any port");
        } else {
            if (!http_.bind_to_port(host, port)) {
                throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port) +
                                         " (address in use or not permitted)");
            }
            port_ = port;
        }
        return port_;
    }

    int port() const { return port_; }

    /// Serves on a background thread until stop().
    void start()
    {
        if (port_ < 0) throw std::logic_error("ApiServer::start before bind");
        thread_ = std::thread([this] { http_.listen_after_bind(); });
        http_.wait_until_ready();
    }

    /// Serves on the calling thread until stop() is called from elsewhere.
    void run()
    {
        if (port_ < 0) throw std::logic_error("ApiServer::run before bind");
        http_.listen_after_bind();
    }

    void stop()
    {
        if (http_.is_running()) http_.stop();
        if (thread_.joinable()) thread_.join();
    }

private:
    static void send_json(httplib::Response& res, int status, const Json& body)
    {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    }

    static void send_error(httplib::Response& res, int status, const std::string& message)
    {
        send_json(res, status, Json{{"error", message}});
    }

    void install_routes()
    {
        // SO_REUSEPORT (httplib's default) would let a second server share the port silently.
        http_.set_socket_options([](socket_t sock) {
            int yes = 1;
            setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof(yes));
        });
        http_.set_default_headers({{"Access-Control-Allow-Origin", "*"}});

        http_.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
            try {
                std::rethrow_exception(ep);
            } catch (const StoreUnavailable& e) {
                send_error(res, 503, e.what());
            } catch (const std::exception& e) {
                send_error(res, 500, e.what());
            } catch (...) {
                send_error(res, 500, "unknown error");
            }
        });

        http_.Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200, Json{{"status", "ok"}});
        });

        http_.Get("/v1/params", [this](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200, to_json(service_.config().params));
        });

        http_.Get("/v1/swm", [this](const httplib::Request& req, httplib::Response& res) {
            if (!req.has_param("url")) return send_error(res, 400, "missing 'url' query parameter");
            const std::string raw = req.get_param_value("url");
            if (!parse_url(raw)) return send_error(res, 400, "not an absolute URL: " + raw);
            const auto lookup = service_.get_model(raw);
            switch (lookup.kind) {
            case ModelLookup::Kind::listed:
                return send_json(res, 200, Json{{"listed", std::string(to_string(*lookup.listed))}});
            case ModelLookup::Kind::ready:
                return send_json(res, 200, to_json(*lookup.model));
            case ModelLookup::Kind::pending:
                return send_json(res, 202, Json{{"status", "pending"}});
            }
        });

        http_.Put(R"(/v1/lists/([a-z]+))", [this](const httplib::Request& req, httplib::Response& res) {
            const auto list = list_kind_from_string(req.matches[1].str());
            if (!list) return send_error(res, 404, "no such list: " + req.matches[1].str());
            Json body;
            try {
                body = Json::parse(req.body);
            } catch (const Json::parse_error&) {
                return send_error(res, 400, "body must be JSON");
            }
            if (!body.is_object() || !body.contains("url") || !body["url"].is_string()) {
                return send_error(res, 400, "body must be {\"url\": \"...\"}");
            }
            const std::string raw = body["url"].get<std::string>();
            if (!parse_url(raw)) return send_error(res, 400, "not an absolute URL: " + raw);
            service_.upsert_list(normalize(raw), *list);
            res.status = 204;
        });

        http_.Post("/v1/reports", [this](const httplib::Request& req, httplib::Response& res) {
            Json body;
            try {
                body = Json::parse(req.body);
            } catch (const Json::parse_error&) {
                return send_error(res, 400, "body must be JSON");
            }
            if (!body.is_object() || !body.contains("url_key") || !body["url_key"].is_string()) {
                return send_error(res, 400, "report must be a verdict object with a url_key");
            }
            const auto id = service_.store().add_report(body["url_key"].get<std::string>(), clock_.now(), body.dump());
            send_json(res, 201, Json{{"id", id}});
        });
    }

    CrawlService& service_;
    const Clock& clock_;
    httplib::Server http_;
    std::thread thread_;
    int port_ = -1;
};

}  // namespace cloakcatch::server
