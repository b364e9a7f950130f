#pragma once

#include "cloakcatch/error.hpp"
#include "cloakcatch/features.hpp"
#include "cloakcatch/text.hpp"
#include "cloakcatch/urlnorm.hpp"
#include "cloakcatch/server/agents.hpp"

#include <httplib.h>

#include <chrono>
#include <functional>
#include <optional>
#include <string>

namespace cloakcatch::server {

class FetchError : public Error {
public:
    using Error::Error;
};

/// No response in time, including hosts that cannot be reached at all.
class FetchTimeout : public FetchError {
public:
    using FetchError::FetchError;
};

class FetchHttpError : public FetchError {
public:
    FetchHttpError(int status, const std::string& url)
        : FetchError("HTTP " + std::to_string(status) + " from " + url), status_(status)
    {
    }

    int status() const { return status_; }

private:
    int status_;
};

class TooManyRedirects : public FetchError {
public:
    using FetchError::FetchError;
};

struct FetchOptions {
    AgentStrings agents;
    std::optional<std::string> referer;
    int redirect_cap = 10;
    std::chrono::milliseconds timeout{30'000};

    /// Maps the target URL to the URL actually requested, e.g. to route spider
    /// visits through a proxy that egresses from crawler address space.
    std::function<std::string(const std::string& url, AgentProfile)> proxy_rewrite;
};

class PageFetcher {
public:
    virtual ~PageFetcher() = default;

    /// Throws a FetchError subclass on failure.
    virtual PageDocument fetch_page(const std::string& target_url, AgentProfile profile) = 0;
};

/// The charset parameter of a Content-Type header value, if any.
inline std::optional<std::string> content_type_charset(std::string_view content_type)
{
    const std::string lower = text::ascii_lower(content_type);
    std::size_t pos = 0;
    while ((pos = lower.find("charset", pos)) != std::string::npos) {
        std::size_t i = pos + 7;
        while (i < lower.size() && (lower[i] == ' ' || lower[i] == '\t')) ++i;
        if (i >= lower.size() || lower[i] != '=') {
            pos = i;
            continue;
        }
        ++i;
        while (i < lower.size() && (lower[i] == ' ' || lower[i] == '\t')) ++i;
        std::string value;
        if (i < lower.size() && (lower[i] == '"' || lower[i] == '\'')) {
            const char q = lower[i++];
            while (i < lower.size() && lower[i] != q) value += lower[i++];
        } else {
            while (i < lower.size() && lower[i] != ';' && lower[i] != ' ' && lower[i] != '\t') value += lower[i++];
        }
        if (value.empty()) return std::nullopt;
        return value;
    }
    return std::nullopt;
}

/// Plain HTTP(S) GET with manual redirect following.
class HttpFetcher final : public PageFetcher {
public:
    explicit HttpFetcher(FetchOptions options = {}) : options_(std::move(options)) {}

    const FetchOptions& options() const { return options_; }

    PageDocument fetch_page(const std::string& target_url, AgentProfile profile) override
    {
        std::string url = options_.proxy_rewrite ? options_.proxy_rewrite(target_url, profile) : target_url;
        const std::string& agent = options_.agents.of(profile);

        for (int hop = 0;; ++hop) {
            const auto parsed = parse_url(url);
            if (!parsed || (parsed->scheme != "http" && parsed->scheme != "https")) {
                throw FetchError("cannot fetch '" + url + "': not an http(s) URL");
            }

            httplib::Client client(parsed->origin());
            const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
            const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout - secs);
            client.set_connection_timeout(secs.count(), usecs.count());
            client.set_read_timeout(secs.count(), usecs.count());
            client.set_write_timeout(secs.count(), usecs.count());
            client.set_follow_location(false);
            client.set_decompress(true);

            httplib::Headers headers{{"User-Agent", agent}, {"Accept", "text/html,*/*;q=0.8"}};
            if (options_.referer) headers.emplace("Referer", *options_.referer);

            auto res = client.Get(parsed->path_and_query(), headers);
            if (!res) {
                throw FetchTimeout("no response from " + url + " (" + httplib::to_string(res.error()) + ")");
            }

            const int status = res->status;
            if (status >= 300 && status < 400 && res->has_header("Location")) {
                if (hop >= options_.redirect_cap) {
                    throw TooManyRedirects("more than " + std::to_string(options_.redirect_cap) +
                                           " redirects starting at " + target_url);
                }
                const auto next = resolve_reference(*parsed, res->get_header_value("Location"));
                if (!next) throw FetchError("unusable redirect target from " + url);
                url = *next;
                continue;
            }
            if (status < 200 || status >= 300) throw FetchHttpError(status, url);

            PageDocument doc;
            doc.raw_bytes = std::move(res->body);
            doc.declared_charset = content_type_charset(res->get_header_value("Content-Type"));
            doc.final_url = url;
            return doc;
        }
    }

private:
    FetchOptions options_;
};

}  // namespace cloakcatch::server
