#include "cloakcatch/urlnorm.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace cloakcatch;

namespace {

struct FuzzUrl {
    std::string prefix;  // scheme://[userinfo@]host[:port]path
    std::vector<std::string> names;
    std::vector<std::string> values;
    std::string fragment;
    bool has_query = false;

    std::string render() const
    {
        std::string s = prefix;
        if (has_query) {
            s += "?";
            for (std::size_t i = 0; i < names.size(); ++i) {
                if (i) s += "&";
                s += names[i];
                if (!values[i].empty()) s += "=" + values[i];
            }
        }
        if (!fragment.empty()) s += "#" + fragment;
        return s;
    }
};

std::string pick(std::mt19937_64& rng, std::string_view alphabet, std::size_t min_len, std::size_t max_len)
{
    std::string s(min_len + rng() % (max_len - min_len + 1), '\0');
    for (auto& c : s) c = alphabet[rng() % alphabet.size()];
    return s;
}

FuzzUrl fuzz_url(std::mt19937_64& rng)
{
    static const std::string_view schemes[] = {"http", "https", "HTTP", "Https", "ftp"};
    static constexpr std::string_view host_chars = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789-.";
    static constexpr std::string_view path_chars = "abcXYZ019-._~%!$'()*+,;:@/=\xC3\xA9";
    static constexpr std::string_view name_chars = "abcdefghijKLMN0123456789_-.[]%+/:?";
    static constexpr std::string_view value_chars = "abcXYZ0123456789=%+/:?-_.~ ";

    FuzzUrl u;
    u.prefix = std::string(schemes[rng() % 5]) + "://";
    if (rng() % 8 == 0) u.prefix += pick(rng, "abc:xyz", 1, 6) + "@";
    if (rng() % 10 == 0) {
        u.prefix += "[::" + std::to_string(rng() % 65536) + "]";
    } else {
        u.prefix += pick(rng, "abcdefghijklmnopqrstuvwxyz0123456789", 1, 1) + pick(rng, host_chars, 0, 20);
    }
    if (rng() % 4 == 0) u.prefix += ":" + std::to_string(rng() % 3 == 0 ? 80 : rng() % 65536);
    if (rng() % 6 != 0) u.prefix += "/" + pick(rng, path_chars, 0, 30);
    u.has_query = rng() % 4 != 0;
    if (u.has_query) {
        const auto n = rng() % 5;
        for (std::size_t i = 0; i < n; ++i) {
            u.names.push_back(pick(rng, name_chars, 1, 8));
            u.values.push_back(rng() % 3 == 0 ? "" : pick(rng, value_chars, 1, 12));
        }
    }
    if (rng() % 3 == 0) u.fragment = pick(rng, "abc#?&=/ 1", 1, 10);
    return u;
}

}  // namespace

TEST(Normalize, Examples)
{
    EXPECT_EQ(normalize("http://www.example.com/?user=value#fragment").key, "www.example.com/?user");
    EXPECT_EQ(normalize("https://Example.COM/a/b").key, "example.com/a/b");
    EXPECT_EQ(normalize("http://h/p?b=2&a=1").key, "h/p?b&a");
}

TEST(Normalize, PortsPathsAndOddities)
{
    EXPECT_EQ(normalize("http://example.com:80/x").key, "example.com/x");
    EXPECT_EQ(normalize("https://example.com:443/x").key, "example.com/x");
    EXPECT_EQ(normalize("http://example.com:8080/x").key, "example.com:8080/x");
    EXPECT_EQ(normalize("http://example.com:0080/x").key, "example.com/x");
    EXPECT_EQ(normalize("http://example.com").key, "example.com");
    EXPECT_EQ(normalize("http://example.com/Dir/").key, "example.com/Dir/");
    EXPECT_EQ(normalize("http://user:pw@example.com/").key, "example.com/");
    EXPECT_EQ(normalize("http://example.com/?a&b=&=c&&d=1").key, "example.com/?a&b&d");
    EXPECT_EQ(normalize("http://example.com/p=q").key, "example.com/p%3Dq");
    EXPECT_EQ(normalize("http://[::1]:8000/x?y=1").key, "[::1]:8000/x?y");
    EXPECT_EQ(normalize("  http://example.com/  ").key, "example.com/");
}

TEST(Normalize, InvalidUrls)
{
    for (const char* bad : {"", "example.com/path", "/relative", "http:/x", "http://", "http://:80/", "mailto:x@y",
                            "http://h:99999/", "http://h:8a/", "http://[::1/", "1http://h/", "http://a b/"}) {
        EXPECT_THROW(normalize(bad), InvalidUrl) << bad;
    }
}

TEST(Normalize, FuzzIdempotenceAndValueIndependence)
{
    std::mt19937_64 rng(0x5eed);
    for (int i = 0; i < 1000; ++i) {
        auto u = fuzz_url(rng);
        const auto raw = u.render();
        const UrlKey key = normalize(raw);
        SCOPED_TRACE(raw);

        EXPECT_EQ(key.key.find('='), std::string::npos);
        EXPECT_EQ(key.key.find('#'), std::string::npos);
        EXPECT_EQ(key.key.substr(0, key.key.find('/')).find("://"), std::string::npos);
        EXPECT_EQ(normalize("http://" + key.key), key);

        auto v = u;
        for (auto& value : v.values) value = pick(rng, "qrs=9", 0, 6);
        v.fragment = rng() % 2 ? "" : pick(rng, "zz?=", 1, 5);
        EXPECT_EQ(normalize(v.render()), key) << v.render();
    }
}

TEST(ResolveReference, Rfc3986Examples)
{
    const auto base = *parse_url("http://a/b/c/d;p?q");
    const std::pair<const char*, const char*> cases[] = {
        {"g", "http://a/b/c/g"},         {"./g", "http://a/b/c/g"},      {"g/", "http://a/b/c/g/"},
        {"/g", "http://a/g"},            {"//g", "http://g"},            {"?y", "http://a/b/c/d;p?y"},
        {"g?y", "http://a/b/c/g?y"},     {"#s", "http://a/b/c/d;p?q#s"}, {"g#s", "http://a/b/c/g#s"},
        {";x", "http://a/b/c/;x"},       {"", "http://a/b/c/d;p?q"},     {".", "http://a/b/c/"},
        {"./", "http://a/b/c/"},         {"..", "http://a/b/"},          {"../", "http://a/b/"},
        {"../g", "http://a/b/g"},        {"../..", "http://a/"},         {"../../g", "http://a/g"},
        {"../../../g", "http://a/g"},    {"/./g", "http://a/g"},         {"/../g", "http://a/g"},
        {"g.", "http://a/b/c/g."},       {".g", "http://a/b/c/.g"},      {"./../g", "http://a/b/g"},
        {"g/./h", "http://a/b/c/g/h"},   {"g/../h", "http://a/b/c/h"},   {"https://x/y", "https://x/y"},
    };
    for (const auto& [ref, want] : cases) {
        EXPECT_EQ(resolve_reference(base, ref), std::optional<std::string>(want)) << ref;
    }
}
