#pragma once

#include "cloakcatch/error.hpp"
#include "cloakcatch/json_io.hpp"
#include "cloakcatch/server/fetcher.hpp"
#include "cloakcatch/server/scheduler.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

namespace cloakcatch::server {

/// Server configuration file. Every key is optional:
///
///   {
///     "listen": "127.0.0.1:8080",
///     "store": "cloakcatch.db",            // ":memory:" keeps everything in RAM
///     "crawl_interval_seconds": 3600,      // M
///     "visits": 5,                         // N
///     "agent_profile": "googlebot",        // googlebot | adsbot | chrome_user
///     "agents": {"googlebot": "...", "adsbot": "...", "chrome_user": "..."},
///     "referer": "https://www.google.com/",
///     "fetch_timeout_seconds": 30,
///     "redirect_cap": 10,
///     "max_observations": 6,
///     "fetch_concurrency": 4,
///     "detection_params": {"r_text": 15, ...}
///   }
struct ServerConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string store_path = "cloakcatch.db";
    CrawlConfig crawl;
    FetchOptions fetch;
};

namespace detail {

inline std::chrono::milliseconds seconds_field(const Json& v, const char* key)
{
    if (!v.is_number() || v.get<double>() < 0 || !std::isfinite(v.get<double>())) {
        throw ConfigError(std::string("'") + key + "' must be a nonnegative number of seconds");
    }
    return std::chrono::milliseconds(std::llround(v.get<double>() * 1000.0));
}

inline long long integer_field(const Json& v, const char* key, long long min)
{
    if (!v.is_number_integer() || v.get<long long>() < min) {
        throw ConfigError(std::string("'") + key + "' must be an integer >= " + std::to_string(min));
    }
    return v.get<long long>();
}

inline std::string string_field(const Json& v, const char* key)
{
    if (!v.is_string()) throw ConfigError(std::string("'") + key + "' must be a string");
    return v.get<std::string>();
}

inline void parse_listen(const std::string& s, ServerConfig& c)
{
    const auto colon = s.rfind(':');
    if (colon == std::string::npos || colon == 0) throw ConfigError("'listen' must look like host:port, got '" + s + "'");
    std::string host = s.substr(0, colon);
    if (host.size() >= 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
    int port = -1;
    try {
        std::size_t used = 0;
        port = std::stoi(s.substr(colon + 1), &used);
        if (used != s.size() - colon - 1) port = -1;
    } catch (const std::exception&) {
    }
    if (port < 0 || port > 65535) throw ConfigError("'listen' has an invalid port: '" + s + "'");
    c.host = host;
    c.port = port;
}

}  // namespace detail

inline ServerConfig config_from_json(const Json& j)
{
    if (!j.is_object()) throw ConfigError("server config must be a JSON object");
    static const std::set<std::string> known = {
        "listen",       "store",          "crawl_interval_seconds", "visits",           "agent_profile",
        "agents",       "referer",        "fetch_timeout_seconds",  "redirect_cap",     "max_observations",
        "fetch_concurrency", "detection_params"};
    for (const auto& [k, v] : j.items()) {
        if (!known.count(k)) throw ConfigError("unknown config key '" + k + "'");
    }

    ServerConfig c;
    if (j.contains("listen")) detail::parse_listen(detail::string_field(j["listen"], "listen"), c);
    if (j.contains("store")) c.store_path = detail::string_field(j["store"], "store");
    if (j.contains("crawl_interval_seconds"))
        c.crawl.interval = detail::seconds_field(j["crawl_interval_seconds"], "crawl_interval_seconds");
    if (j.contains("visits")) c.crawl.visits = static_cast<int>(detail::integer_field(j["visits"], "visits", 1));
    if (j.contains("agent_profile")) {
        const auto p = agent_profile_from_string(detail::string_field(j["agent_profile"], "agent_profile"));
        if (!p) throw ConfigError("'agent_profile' must be googlebot, adsbot or chrome_user");
        c.crawl.profile = *p;
    }
    if (j.contains("agents")) {
        const Json& a = j["agents"];
        if (!a.is_object()) throw ConfigError("'agents' must be an object");
        for (const auto& [k, v] : a.items()) {
            const auto p = agent_profile_from_string(k);
            if (!p) throw ConfigError("unknown agent profile '" + k + "'");
            const std::string ua = detail::string_field(v, "agents");
            switch (*p) {
            case AgentProfile::googlebot: c.fetch.agents.googlebot = ua; break;
            case AgentProfile::adsbot: c.fetch.agents.adsbot = ua; break;
            case AgentProfile::chrome_user: c.fetch.agents.chrome_user = ua; break;
            }
        }
    }
    if (j.contains("referer")) c.fetch.referer = detail::string_field(j["referer"], "referer");
    if (j.contains("fetch_timeout_seconds"))
        c.fetch.timeout = detail::seconds_field(j["fetch_timeout_seconds"], "fetch_timeout_seconds");
    if (j.contains("redirect_cap"))
        c.fetch.redirect_cap = static_cast<int>(detail::integer_field(j["redirect_cap"], "redirect_cap", 0));
    if (j.contains("max_observations"))
        c.crawl.max_observations =
            static_cast<std::size_t>(detail::integer_field(j["max_observations"], "max_observations", 1));
    if (j.contains("fetch_concurrency"))
        c.crawl.fetch_concurrency =
            static_cast<std::size_t>(detail::integer_field(j["fetch_concurrency"], "fetch_concurrency", 1));
    if (j.contains("detection_params")) {
        try {
            c.crawl.params = params_from_json(j["detection_params"]);
        } catch (const ParseError& e) {
            throw ConfigError(std::string("detection_params: ") + e.what());
        }
    }
    c.crawl.validate();
    return c;
}

inline ServerConfig load_config(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    Json j;
    try {
        j = Json::parse(ss.str());
    } catch (const Json::parse_error& e) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

}  // namespace cloakcatch::server
