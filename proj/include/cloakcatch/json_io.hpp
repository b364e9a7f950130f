#pragma once

// JSON encodings for models, verdicts and parameters. Field order is part of
// the wire format, hence ordered_json throughout.

#include "cloakcatch/detector.hpp"
#include "cloakcatch/error.hpp"
#include "cloakcatch/swm.hpp"
#include "cloakcatch/time.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <string_view>

namespace cloakcatch {

using Json = nlohmann::ordered_json;

namespace detail {

inline const Json& require(const Json& j, const char* key)
{
    if (!j.is_object() || !j.contains(key)) {
        throw ParseError(std::string("missing field '") + key + "'");
    }
    return j.at(key);
}

inline double require_number(const Json& j, const char* key)
{
    const Json& v = require(j, key);
    if (!v.is_number()) throw ParseError(std::string("field '") + key + "' must be a number");
    return v.get<double>();
}

inline Timestamp require_time(const Json& j, const char* key)
{
    const Json& v = require(j, key);
    if (!v.is_string()) throw ParseError(std::string("field '") + key + "' must be an RFC 3339 string");
    const auto t = parse_rfc3339(v.get<std::string>());
    if (!t) throw ParseError(std::string("field '") + key + "' is not RFC 3339: " + v.get<std::string>());
    return *t;
}

}  // namespace detail

inline Json to_json(const Cluster& c)
{
    Json j;
    j["centroid"] = Json::array();
    for (const double v : c.centroid) j["centroid"].push_back(v);
    j["link_heights"] = c.link_heights;
    j["size"] = c.size;
    return j;
}

inline Cluster cluster_from_json(const Json& j)
{
    Cluster c;
    const Json& centroid = detail::require(j, "centroid");
    if (!centroid.is_array() || centroid.size() != static_cast<std::size_t>(kFingerprintBits)) {
        throw ParseError("cluster centroid must be an array of 64 numbers");
    }
    for (std::size_t i = 0; i < centroid.size(); ++i) {
        if (!centroid[i].is_number()) throw ParseError("cluster centroid must hold numbers");
        const double v = centroid[i].get<double>();
        if (!(v >= 0.0 && v <= 1.0)) throw ParseError("cluster centroid values must lie in [0,1]");
        c.centroid[i] = v;
    }
    const Json& links = detail::require(j, "link_heights");
    if (!links.is_array()) throw ParseError("link_heights must be an array");
    for (const auto& h : links) {
        if (!h.is_number() || !(h.get<double>() >= 0.0)) throw ParseError("link heights must be nonnegative numbers");
        c.link_heights.push_back(h.get<double>());
    }
    const Json& size = detail::require(j, "size");
    if (!size.is_number_unsigned() || size.get<std::size_t>() == 0) {
        throw ParseError("cluster size must be a positive integer");
    }
    c.size = size.get<std::size_t>();
    if (c.link_heights.size() != c.size - 1) {
        throw ParseError("cluster must carry exactly size-1 link heights");
    }
    return c;
}

inline Json to_json(const WebsiteModel& m)
{
    Json j;
    j["url_key"] = m.url_key;
    j["built_at"] = format_rfc3339(m.built_at);
    j["params_fingerprint"] = m.params_fingerprint;
    Json channels;
    channels["text"] = Json::array();
    for (const auto& c : m.text_clusters) channels["text"].push_back(to_json(c));
    channels["tag"] = Json::array();
    for (const auto& c : m.tag_clusters) channels["tag"].push_back(to_json(c));
    j["channels"] = std::move(channels);
    return j;
}

inline WebsiteModel model_from_json(const Json& j)
{
    WebsiteModel m;
    const Json& key = detail::require(j, "url_key");
    if (!key.is_string()) throw ParseError("url_key must be a string");
    m.url_key = key.get<std::string>();
    m.built_at = detail::require_time(j, "built_at");
    const Json& pf = detail::require(j, "params_fingerprint");
    if (!pf.is_string()) throw ParseError("params_fingerprint must be a string");
    m.params_fingerprint = pf.get<std::string>();
    const Json& channels = detail::require(j, "channels");
    const auto read_channel = [&](const char* name, std::vector<Cluster>& out) {
        const Json& arr = detail::require(channels, name);
        if (!arr.is_array() || arr.empty()) throw ParseError(std::string("channel '") + name + "' must be a non-empty array");
        std::size_t total = 0;
        for (const auto& c : arr) {
            out.push_back(cluster_from_json(c));
            total += out.back().size;
        }
        return total;
    };
    const std::size_t text_total = read_channel("text", m.text_clusters);
    const std::size_t tag_total = read_channel("tag", m.tag_clusters);
    if (text_total != tag_total) {
        throw ParseError("text and tag channels cover different observation counts");
    }
    m.observation_count = text_total;
    return m;
}

inline std::string dump_model(const WebsiteModel& m)
{
    return to_json(m).dump();
}

inline WebsiteModel parse_model(std::string_view text)
{
    Json j;
    try {
        j = Json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("model JSON: ") + e.what());
    }
    return model_from_json(j);
}

inline Json to_json(const ChannelResult& r)
{
    Json j;
    j["min_excess"] = r.min_excess;
    j["nearest_cluster_index"] = r.nearest_cluster_index;
    j["distance"] = r.distance;
    j["rejected"] = r.rejected;
    return j;
}

inline Json to_json(const Verdict& v)
{
    Json j;
    j["url_key"] = v.url_key;
    j["channel_results"] = Json{{"text", to_json(v.text)}, {"tag", to_json(v.tag)}};
    j["is_cloaking"] = v.is_cloaking;
    j["feature_counts"] = Json{{"text", v.text_feature_count}, {"tag", v.tag_feature_count}};
    j["evaluated_at"] = format_rfc3339(v.evaluated_at);
    return j;
}

inline Json to_json(const DetectionParams& p)
{
    Json j;
    j["t_detect_text"] = p.t_detect_text;
    j["t_detect_tag"] = p.t_detect_tag;
    j["r_text"] = p.r_text;
    j["r_tag"] = p.r_tag;
    j["t_learn_text"] = p.t_learn_text;
    j["t_learn_tag"] = p.t_learn_tag;
    j["combiner"] = std::string(to_string(p.combiner));
    return j;
}

/// Fields absent from `j` keep the values already in `base`.
inline DetectionParams params_from_json(const Json& j, DetectionParams base = {})
{
    if (!j.is_object()) throw ParseError("detection params must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (key == "combiner") {
            if (!value.is_string()) throw ParseError("combiner must be a string");
            const auto c = combiner_from_string(value.get<std::string>());
            if (!c) throw ParseError("unknown combiner '" + value.get<std::string>() + "'");
            base.combiner = *c;
            continue;
        }
        if (!value.is_number()) throw ParseError("detection param '" + key + "' must be a number");
        const double v = value.get<double>();
        if (key == "t_detect_text") base.t_detect_text = v;
        else if (key == "t_detect_tag") base.t_detect_tag = v;
        else if (key == "r_text") base.r_text = v;
        else if (key == "r_tag") base.r_tag = v;
        else if (key == "t_learn_text") base.t_learn_text = v;
        else if (key == "t_learn_tag") base.t_learn_tag = v;
        else throw ParseError("unknown detection param '" + key + "'");
    }
    if (!base.valid()) throw ParseError("detection params must be nonnegative");
    return base;
}

inline Json to_json(const Observation& o)
{
    Json j;
    j["fingerprint"] = o.fingerprint.hex();
    j["fetched_at"] = format_rfc3339(o.fetched_at);
    j["feature_count"] = o.feature_count;
    return j;
}

inline Observation observation_from_json(const Json& j)
{
    Observation o;
    const Json& fp = detail::require(j, "fingerprint");
    const auto parsed = fp.is_string() ? Simhash64::from_hex(fp.get<std::string>()) : std::nullopt;
    if (!parsed) throw ParseError("fingerprint must be 16 lowercase hex characters");
    o.fingerprint = *parsed;
    o.fetched_at = detail::require_time(j, "fetched_at");
    const Json& n = detail::require(j, "feature_count");
    if (!n.is_number_unsigned()) throw ParseError("feature_count must be a nonnegative integer");
    o.feature_count = n.get<std::size_t>();
    return o;
}

}  // namespace cloakcatch
