#pragma once

#include "cloakcatch/error.hpp"

#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cloakcatch {

/// Canonical per-URL identifier: host[:port] + path [+ "?" + parameter names].
/// Never contains a scheme, a fragment or '='.
struct UrlKey {
    std::string key;

    friend bool operator==(const UrlKey&, const UrlKey&) = default;
    friend auto operator<=>(const UrlKey&, const UrlKey&) = default;
};

struct ParsedUrl {
    std::string scheme;  // lowercase
    std::string host;    // lowercase; IPv6 literals keep their brackets
    std::optional<std::string> port;
    std::string path;
    std::optional<std::string> query;
    std::optional<std::string> fragment;

    std::string origin() const
    {
        std::string o = scheme + "://" + host;
        if (port) o += ":" + *port;
        return o;
    }

    std::string path_and_query() const
    {
        std::string p = path.empty() ? "/" : path;
        if (query) p += "?" + *query;
        return p;
    }

    std::string to_string() const
    {
        std::string s = origin() + path;
        if (query) s += "?" + *query;
        if (fragment) s += "#" + *fragment;
        return s;
    }
};

namespace detail {

inline bool is_scheme_char(char c)
{
    return std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.';
}

inline std::string_view trim_url(std::string_view s)
{
    while (!s.empty() && static_cast<unsigned char>(s.front()) <= 0x20) s.remove_prefix(1);
    while (!s.empty() && static_cast<unsigned char>(s.back()) <= 0x20) s.remove_suffix(1);
    return s;
}

inline std::string encode_equals(std::string_view s)
{
    std::string out;
    out.reserve(s.size());
    for (const char c : s) {
        if (c == '=') {
            out += "%3D";
        } else {
            out.push_back(c);
        }
    }
    return out;
}

}  // namespace detail

/// Parses an absolute hierarchical URL ("scheme://authority/path?query#fragment").
inline std::optional<ParsedUrl> parse_url(std::string_view input)
{
    const std::string_view s = detail::trim_url(input);
    const auto colon = s.find(':');
    if (colon == std::string_view::npos || colon == 0 || !std::isalpha(static_cast<unsigned char>(s[0]))) {
        return std::nullopt;
    }
    for (std::size_t i = 0; i < colon; ++i) {
        if (!detail::is_scheme_char(s[i])) return std::nullopt;
    }
    if (s.substr(colon + 1, 2) != "//") {
        return std::nullopt;
    }
    ParsedUrl u;
    for (std::size_t i = 0; i < colon; ++i) {
        u.scheme.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(s[i]))));
    }
    std::string_view rest = s.substr(colon + 3);
    const auto authority_end = rest.find_first_of("/?#");
    std::string_view authority = rest.substr(0, authority_end);
    rest = authority_end == std::string_view::npos ? std::string_view{} : rest.substr(authority_end);

    if (const auto at = authority.rfind('@'); at != std::string_view::npos) {
        authority.remove_prefix(at + 1);
    }
    std::string_view host = authority;
    std::string_view port;
    if (!authority.empty() && authority.front() == '[') {
        const auto close = authority.find(']');
        if (close == std::string_view::npos) return std::nullopt;
        host = authority.substr(0, close + 1);
        const std::string_view after = authority.substr(close + 1);
        if (!after.empty()) {
            if (after.front() != ':') return std::nullopt;
            port = after.substr(1);
        }
    } else if (const auto pc = authority.rfind(':'); pc != std::string_view::npos) {
        host = authority.substr(0, pc);
        port = authority.substr(pc + 1);
    }
    if (host.empty()) return std::nullopt;
    for (const char c : host) {
        if (static_cast<unsigned char>(c) <= 0x20 || c == '\\' || c == '<' || c == '>' || c == '^' || c == '|') {
            return std::nullopt;
        }
    }
    for (const char c : port) {
        if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
    }
    if (port.size() > 5 || (!port.empty() && std::stoul(std::string(port)) > 65535)) {
        return std::nullopt;
    }
    for (const char c : host) {
        u.host.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    if (!port.empty()) {
        // Leading zeros are insignificant.
        const auto first = port.find_first_not_of('0');
        u.port = first == std::string_view::npos ? std::string("0") : std::string(port.substr(first));
    }

    const auto hash = rest.find('#');
    if (hash != std::string_view::npos) {
        u.fragment = std::string(rest.substr(hash + 1));
        rest = rest.substr(0, hash);
    }
    const auto q = rest.find('?');
    if (q != std::string_view::npos) {
        u.query = std::string(rest.substr(q + 1));
        rest = rest.substr(0, q);
    }
    u.path = std::string(rest);
    return u;
}

/// Parameter names of a query string in original order; empty names are skipped.
inline std::vector<std::string> query_parameter_names(std::string_view query)
{
    std::vector<std::string> names;
    std::size_t pos = 0;
    while (pos <= query.size()) {
        auto amp = query.find('&', pos);
        if (amp == std::string_view::npos) amp = query.size();
        const std::string_view param = query.substr(pos, amp - pos);
        const std::string_view name = param.substr(0, param.find('='));
        if (!name.empty()) {
            names.emplace_back(name);
        }
        pos = amp + 1;
    }
    return names;
}

/// Reduces a URL to its model key: parameter values, scheme, fragment, userinfo
/// and ports 80/443 are dropped; host is lowercased; path is kept verbatim.
inline UrlKey normalize(std::string_view url)
{
    const auto u = parse_url(url);
    if (!u) {
        throw InvalidUrl(std::string(url));
    }
    std::string key = detail::encode_equals(u->host);
    if (u->port && *u->port != "80" && *u->port != "443") {
        key += ":" + *u->port;
    }
    key += detail::encode_equals(u->path);
    if (u->query) {
        const auto names = query_parameter_names(*u->query);
        for (std::size_t i = 0; i < names.size(); ++i) {
            key += (i == 0 ? "?" : "&");
            key += names[i];
        }
    }
    return UrlKey{std::move(key)};
}

namespace detail {

// RFC 3986 section 5.2.4.
inline std::string remove_dot_segments(std::string_view path)
{
    std::string out;
    std::string in(path);
    while (!in.empty()) {
        if (in.rfind("../", 0) == 0) {
            in.erase(0, 3);
        } else if (in.rfind("./", 0) == 0) {
            in.erase(0, 2);
        } else if (in.rfind("/./", 0) == 0) {
            in.erase(0, 2);
        } else if (in == "/.") {
            in = "/";
        } else if (in.rfind("/../", 0) == 0 || in == "/..") {
            in = in == "/.." ? "/" : in.substr(3);
            const auto slash = out.rfind('/');
            out.erase(slash == std::string::npos ? 0 : slash);
        } else if (in == "." || in == "..") {
            in.clear();
        } else {
            const auto next = in.find('/', in.front() == '/' ? 1 : 0);
            out += in.substr(0, next);
            in.erase(0, next == std::string::npos ? in.size() : next);
        }
    }
    return out;
}

}  // namespace detail

/// Resolves a (possibly relative) reference such as a Location header against `base`.
inline std::optional<std::string> resolve_reference(const ParsedUrl& base, std::string_view ref_in)
{
    const std::string_view ref = detail::trim_url(ref_in);
    if (parse_url(ref)) {
        return std::string(ref);
    }
    if (ref.rfind("//", 0) == 0) {
        const std::string candidate = base.scheme + ":" + std::string(ref);
        return parse_url(candidate) ? std::optional<std::string>(candidate) : std::nullopt;
    }
    std::string target;
    if (ref.empty()) {
        ParsedUrl b = base;
        b.fragment.reset();
        return b.to_string();
    }
    if (ref.front() == '#') {
        ParsedUrl b = base;
        b.fragment = std::string(ref.substr(1));
        return b.to_string();
    }
    if (ref.front() == '?') {
        return base.origin() + (base.path.empty() ? "/" : base.path) + std::string(ref);
    }
    std::string_view ref_path = ref;
    std::string suffix;
    if (const auto cut = ref.find_first_of("?#"); cut != std::string_view::npos) {
        suffix = std::string(ref.substr(cut));
        ref_path = ref.substr(0, cut);
    }
    std::string merged;
    if (!ref_path.empty() && ref_path.front() == '/') {
        merged = std::string(ref_path);
    } else {
        const std::string base_path = base.path.empty() ? "/" : base.path;
        merged = base_path.substr(0, base_path.rfind('/') + 1) + std::string(ref_path);
    }
    return base.origin() + detail::remove_dot_segments(merged) + suffix;
}

}  // namespace cloakcatch
