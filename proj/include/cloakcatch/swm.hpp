#pragma once

// Simhash-based Website Models: per-URL clusters of spider fingerprints,
// learned with an inconsistency-gated agglomerative clustering.

#include "cloakcatch/error.hpp"
#include "cloakcatch/simhash.hpp"
#include "cloakcatch/time.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace cloakcatch {

using Centroid = std::array<double, kFingerprintBits>;

/// One spider view's fingerprint for a single channel.
struct Observation {
    Simhash64 fingerprint;
    Timestamp fetched_at{};
    std::size_t feature_count = 0;

    friend bool operator==(const Observation&, const Observation&) = default;
};

/// L1 distance between a fingerprint's bits and a real-valued centroid.
inline double centroid_distance(Simhash64 s, const Centroid& c)
{
    double d = 0.0;
    for (int i = 0; i < kFingerprintBits; ++i) {
        d += std::fabs((s.bit(i) ? 1.0 : 0.0) - c[static_cast<std::size_t>(i)]);
    }
    return d;
}

inline double centroid_distance(const Centroid& a, const Centroid& b)
{
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d += std::fabs(a[i] - b[i]);
    }
    return d;
}

inline Centroid binary_centroid(Simhash64 s)
{
    Centroid c{};
    for (int i = 0; i < kFingerprintBits; ++i) {
        c[static_cast<std::size_t>(i)] = s.bit(i) ? 1.0 : 0.0;
    }
    return c;
}

struct LinkStats {
    double mean = 0.0;
    double stddev = 0.0;  // population; 0 with fewer than two links
};

inline LinkStats link_stats(std::span<const double> heights)
{
    LinkStats st;
    if (heights.empty()) {
        return st;
    }
    double sum = 0.0;
    for (const double h : heights) sum += h;
    st.mean = sum / static_cast<double>(heights.size());
    if (heights.size() < 2) {
        return st;
    }
    double sq = 0.0;
    for (const double h : heights) sq += (h - st.mean) * (h - st.mean);
    st.stddev = std::sqrt(sq / static_cast<double>(heights.size()));
    return st;
}

/// Inconsistency coefficient (d - mean) / stddev of the given link heights.
/// Leaves (fewer than two links) and zero-spread link sets yield 0.
inline double inconsistency(double d, std::span<const double> link_heights)
{
    if (link_heights.size() < 2) {
        return 0.0;
    }
    const auto st = link_stats(link_heights);
    if (st.stddev == 0.0) {
        return 0.0;
    }
    return (d - st.mean) / st.stddev;
}

/// A learned version of one channel of a website.
struct Cluster {
    Centroid centroid{};
    std::vector<double> link_heights;  // one per merge, size - 1 entries
    std::size_t size = 1;
    std::vector<Simhash64> members;  // populated only when members are retained

    static Cluster singleton(Simhash64 s)
    {
        Cluster c;
        c.centroid = binary_centroid(s);
        return c;
    }

    LinkStats stats() const { return link_stats(link_heights); }

    friend bool operator==(const Cluster&, const Cluster&) = default;
};

/// Centroid of the two clusters combined, exact as count/size per bit.
inline Centroid merged_centroid(const Cluster& r, const Cluster& s)
{
    const std::size_t n = r.size + s.size;
    Centroid out{};
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto count = std::llround(r.centroid[i] * static_cast<double>(r.size)) +
                           std::llround(s.centroid[i] * static_cast<double>(s.size));
        out[i] = static_cast<double>(count) / static_cast<double>(n);
    }
    return out;
}

inline Cluster merge_clusters(const Cluster& r, const Cluster& s, double link_height)
{
    Cluster m;
    m.centroid = merged_centroid(r, s);
    m.size = r.size + s.size;
    m.link_heights.reserve(r.link_heights.size() + s.link_heights.size() + 1);
    m.link_heights = r.link_heights;
    m.link_heights.insert(m.link_heights.end(), s.link_heights.begin(), s.link_heights.end());
    m.link_heights.push_back(link_height);
    if (!r.members.empty() || !s.members.empty()) {
        m.members = r.members;
        m.members.insert(m.members.end(), s.members.begin(), s.members.end());
    }
    return m;
}

/// Greedy bottom-up clustering of one channel's observations.
///
/// Each round takes the closest still-eligible pair (ties: lowest creation ids,
/// lexicographically). The pair merges when its inconsistency against the
/// union of both clusters' links is below `t_learn`; otherwise the pair is
/// never considered again. Clusters come back ordered by creation id.
inline std::vector<Cluster> cluster_channel(std::span<const Simhash64> observations, double t_learn,
                                            bool retain_members = false)
{
    if (observations.empty()) {
        throw EmptyInput("cluster_channel: no observations");
    }
    struct Node {
        std::size_t id;
        Cluster cluster;
    };
    std::vector<Node> active;
    active.reserve(observations.size());
    for (std::size_t i = 0; i < observations.size(); ++i) {
        Node n{i, Cluster::singleton(observations[i])};
        if (retain_members) n.cluster.members.push_back(observations[i]);
        active.push_back(std::move(n));
    }
    std::size_t next_id = observations.size();
    std::set<std::pair<std::size_t, std::size_t>> ineligible;

    for (;;) {
        std::size_t best_a = 0;
        std::size_t best_b = 0;
        double best_d = 0.0;
        std::pair<std::size_t, std::size_t> best_key{0, 0};
        bool found = false;
        for (std::size_t a = 0; a < active.size(); ++a) {
            for (std::size_t b = a + 1; b < active.size(); ++b) {
                const std::pair<std::size_t, std::size_t> key = std::minmax(active[a].id, active[b].id);
                if (ineligible.contains(key)) continue;
                const double d = centroid_distance(active[a].cluster.centroid, active[b].cluster.centroid);
                if (!found || d < best_d || (d == best_d && key < best_key)) {
                    found = true;
                    best_d = d;
                    best_key = key;
                    best_a = a;
                    best_b = b;
                }
            }
        }
        if (!found) break;

        const Cluster& r = active[best_a].cluster;
        const Cluster& s = active[best_b].cluster;
        std::vector<double> links = r.link_heights;
        links.insert(links.end(), s.link_heights.begin(), s.link_heights.end());
        if (inconsistency(best_d, links) < t_learn) {
            Node merged{next_id++, merge_clusters(r, s, best_d)};
            // best_a < best_b: erase the later index first.
            active.erase(active.begin() + static_cast<std::ptrdiff_t>(best_b));
            active.erase(active.begin() + static_cast<std::ptrdiff_t>(best_a));
            active.push_back(std::move(merged));
        } else {
            ineligible.insert(best_key);
        }
    }
    std::vector<Cluster> out;
    out.reserve(active.size());
    for (auto& n : active) out.push_back(std::move(n.cluster));
    return out;
}

inline std::vector<Simhash64> fingerprints_of(std::span<const Observation> obs)
{
    std::vector<Simhash64> out;
    out.reserve(obs.size());
    for (const auto& o : obs) out.push_back(o.fingerprint);
    return out;
}

/// Parameters that shape model building.
struct BuildParams {
    double t_learn_text = 0.7;
    double t_learn_tag = 0.7;
    std::size_t max_observations = 6;
    bool retain_members = false;

    /// Identifies the threshold set a model was built with.
    std::string fingerprint() const
    {
        std::ostringstream os;
        os.precision(17);
        os << "swm1;t_learn_text=" << t_learn_text << ";t_learn_tag=" << t_learn_tag
           << ";max_observations=" << max_observations;
        return os.str();
    }
};

/// Per-URL model: clusters for both channels.
struct WebsiteModel {
    std::string url_key;
    std::vector<Cluster> text_clusters;
    std::vector<Cluster> tag_clusters;
    std::size_t observation_count = 0;
    Timestamp built_at{};
    std::string params_fingerprint;

    const std::vector<Cluster>& clusters(Channel c) const { return c == Channel::text ? text_clusters : tag_clusters; }

    friend bool operator==(const WebsiteModel&, const WebsiteModel&) = default;
};

inline WebsiteModel build_model(std::string url_key, std::span<const Observation> text_obs,
                                std::span<const Observation> tag_obs, const BuildParams& params,
                                Timestamp built_at = now_utc())
{
    if (text_obs.empty() || tag_obs.empty()) {
        throw EmptyInput("build_model: no observations for '" + url_key + "'");
    }
    if (text_obs.size() != tag_obs.size()) {
        throw CountMismatch("build_model: " + std::to_string(text_obs.size()) + " text vs " +
                            std::to_string(tag_obs.size()) + " tag observations");
    }
    if (text_obs.size() > params.max_observations) {
        throw TooManyObservations("build_model: " + std::to_string(text_obs.size()) + " observations exceed cap of " +
                                  std::to_string(params.max_observations));
    }
    WebsiteModel m;
    m.url_key = std::move(url_key);
    m.text_clusters = cluster_channel(fingerprints_of(text_obs), params.t_learn_text, params.retain_members);
    m.tag_clusters = cluster_channel(fingerprints_of(tag_obs), params.t_learn_tag, params.retain_members);
    m.observation_count = text_obs.size();
    m.built_at = built_at;
    m.params_fingerprint = params.fingerprint();
    return m;
}

}  // namespace cloakcatch
