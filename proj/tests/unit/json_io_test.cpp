#include "cloakcatch/json_io.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace cloakcatch;

namespace {

WebsiteModel random_model(std::mt19937_64& rng)
{
    std::vector<Observation> text;
    std::vector<Observation> tag;
    const auto n = 1 + rng() % 6;
    const auto t0 = rng();
    for (std::size_t i = 0; i < n; ++i) {
        text.push_back({Simhash64(t0 ^ (rng() & rng() & rng())), Timestamp{}, 100});
        tag.push_back({Simhash64(rng()), Timestamp{}, 40});
    }
    return build_model("example.com/p?q", text, tag, BuildParams{}, *parse_rfc3339("2025-03-04T05:06:07.089Z"));
}

void expect_same_clusters(const std::vector<Cluster>& a, const std::vector<Cluster>& b)
{
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].centroid, b[i].centroid);
        EXPECT_EQ(a[i].link_heights, b[i].link_heights);
        EXPECT_EQ(a[i].size, b[i].size);
    }
}

}  // namespace

TEST(ModelJson, RoundTripIsExact)
{
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        const auto m = random_model(rng);
        const auto text = dump_model(m);
        const auto back = parse_model(text);
        EXPECT_EQ(back.url_key, m.url_key);
        EXPECT_EQ(back.built_at, m.built_at);
        EXPECT_EQ(back.params_fingerprint, m.params_fingerprint);
        EXPECT_EQ(back.observation_count, m.observation_count);
        expect_same_clusters(back.text_clusters, m.text_clusters);
        expect_same_clusters(back.tag_clusters, m.tag_clusters);
        EXPECT_EQ(dump_model(back), text);
    }
}

TEST(ModelJson, FieldOrder)
{
    std::mt19937_64 rng(1);
    const auto j = to_json(random_model(rng));
    std::vector<std::string> keys;
    for (const auto& [k, v] : j.items()) keys.push_back(k);
    EXPECT_EQ(keys, (std::vector<std::string>{"url_key", "built_at", "params_fingerprint", "channels"}));
    std::vector<std::string> channel_keys;
    for (const auto& [k, v] : j["channels"].items()) channel_keys.push_back(k);
    EXPECT_EQ(channel_keys, (std::vector<std::string>{"text", "tag"}));
    std::vector<std::string> cluster_keys;
    for (const auto& [k, v] : j["channels"]["text"][0].items()) cluster_keys.push_back(k);
    EXPECT_EQ(cluster_keys, (std::vector<std::string>{"centroid", "link_heights", "size"}));
    EXPECT_EQ(j["built_at"], "2025-03-04T05:06:07.089Z");
}

TEST(ModelJson, FullPrecisionNumbers)
{
    WebsiteModel m;
    m.url_key = "k";
    Cluster c = Cluster::singleton(Simhash64(0));
    c.centroid[0] = 1.0 / 3.0;
    c.link_heights = {0.1 + 0.2};
    c.size = 2;
    m.text_clusters = {c};
    m.tag_clusters = {Cluster::singleton(Simhash64(1)), Cluster::singleton(Simhash64(2))};
    const auto back = parse_model(dump_model(m));
    EXPECT_EQ(back.text_clusters[0].centroid[0], 1.0 / 3.0);
    EXPECT_EQ(back.text_clusters[0].link_heights[0], 0.1 + 0.2);
}

TEST(ModelJson, RejectsMalformed)
{
    std::mt19937_64 rng(2);
    const auto good = to_json(random_model(rng));
    EXPECT_NO_THROW(model_from_json(good));

    EXPECT_THROW(parse_model("{not json"), ParseError);
    EXPECT_THROW(parse_model("[]"), ParseError);

    auto j = good;
    j.erase("url_key");
    EXPECT_THROW(model_from_json(j), ParseError);

    j = good;
    j["built_at"] = "yesterday";
    EXPECT_THROW(model_from_json(j), ParseError);

    j = good;
    j["channels"]["text"] = Json::array();
    EXPECT_THROW(model_from_json(j), ParseError);

    j = good;
    j["channels"]["tag"][0]["centroid"].erase(0);
    EXPECT_THROW(model_from_json(j), ParseError);

    j = good;
    j["channels"]["tag"][0]["centroid"][3] = 1.5;
    EXPECT_THROW(model_from_json(j), ParseError);

    j = good;
    j["channels"]["tag"][0]["size"] = 0;
    EXPECT_THROW(model_from_json(j), ParseError);

    j = good;
    j["channels"]["tag"][0]["link_heights"].push_back(1.0);
    EXPECT_THROW(model_from_json(j), ParseError);

    j = good;
    j["channels"]["text"].push_back(to_json(Cluster::singleton(Simhash64(0))));
    EXPECT_THROW(model_from_json(j), ParseError);  // channel totals disagree
}

TEST(VerdictJson, Shape)
{
    Verdict v;
    v.url_key = "example.com/";
    v.text = {true, 20.0, 3.5, 0};
    v.tag = {false, 2.0, -11.0, 1};
    v.is_cloaking = false;
    v.text_feature_count = 1200;
    v.tag_feature_count = 85;
    v.evaluated_at = *parse_rfc3339("2025-01-02T03:04:05Z");
    const auto j = to_json(v);
    EXPECT_EQ(j.dump(),
              R"({"url_key":"example.com/","channel_results":{"text":{"min_excess":3.5,"nearest_cluster_index":0,)"
              R"("distance":20.0,"rejected":true},"tag":{"min_excess":-11.0,"nearest_cluster_index":1,"distance":2.0,)"
              R"("rejected":false}},"is_cloaking":false,"feature_counts":{"text":1200,"tag":85},)"
              R"("evaluated_at":"2025-01-02T03:04:05Z"})");
}

TEST(ParamsJson, RoundTripAndOverrides)
{
    DetectionParams p;
    p.r_text = 9;
    p.combiner = Combiner::either;
    EXPECT_EQ(params_from_json(to_json(p)), p);

    const auto partial = params_from_json(Json::parse(R"({"t_detect_tag": 0.5, "combiner": "tag-only"})"));
    EXPECT_EQ(partial.t_detect_tag, 0.5);
    EXPECT_EQ(partial.combiner, Combiner::tag_only);
    EXPECT_EQ(partial.r_text, DetectionParams{}.r_text);

    EXPECT_THROW(params_from_json(Json::parse(R"({"radius": 3})")), ParseError);
    EXPECT_THROW(params_from_json(Json::parse(R"({"r_tag": -1})")), ParseError);
    EXPECT_THROW(params_from_json(Json::parse(R"({"combiner": "all"})")), ParseError);
    EXPECT_THROW(params_from_json(Json::parse(R"([1,2])")), ParseError);
}

TEST(ObservationJson, RoundTrip)
{
    const Observation o{Simhash64(0x00ff00ff00ff00ffULL), *parse_rfc3339("2024-12-31T23:59:59.5Z"), 321};
    const auto j = to_json(o);
    EXPECT_EQ(j["fingerprint"], "00ff00ff00ff00ff");
    const auto back = observation_from_json(j);
    EXPECT_EQ(back.fingerprint, o.fingerprint);
    EXPECT_EQ(back.fetched_at, o.fetched_at);
    EXPECT_EQ(back.feature_count, 321u);

    auto bad = j;
    bad["fingerprint"] = "00FF00FF00FF00FF";
    EXPECT_THROW(observation_from_json(bad), ParseError);
    bad = j;
    bad["feature_count"] = -1;
    EXPECT_THROW(observation_from_json(bad), ParseError);
}

TEST(Rfc3339, FormatAndParse)
{
    const auto t = parse_rfc3339("2025-06-01T12:00:00+02:00");
    ASSERT_TRUE(t);
    EXPECT_EQ(format_rfc3339(*t), "2025-06-01T10:00:00Z");
    EXPECT_EQ(format_rfc3339(*parse_rfc3339("1970-01-01T00:00:00.25Z")), "1970-01-01T00:00:00.250Z");
    EXPECT_FALSE(parse_rfc3339("2025-13-01T00:00:00Z"));
    EXPECT_FALSE(parse_rfc3339("2025-06-01X12:00:00Z"));
    EXPECT_FALSE(parse_rfc3339("2025-06-01T12:00:00"));
}
