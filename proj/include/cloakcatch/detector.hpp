#pragma once

#include "cloakcatch/error.hpp"
#include "cloakcatch/features.hpp"
#include "cloakcatch/simhash.hpp"
#include "cloakcatch/swm.hpp"
#include "cloakcatch/time.hpp"

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace cloakcatch {

/// How per-channel rejections combine into the cloaking decision.
enum class Combiner { both, either, text_only, tag_only };

inline constexpr std::string_view to_string(Combiner c)
{
    switch (c) {
    case Combiner::both: return "both";
    case Combiner::either: return "either";
    case Combiner::text_only: return "text-only";
    case Combiner::tag_only: return "tag-only";
    }
    return "both";
}

inline std::optional<Combiner> combiner_from_string(std::string_view s)
{
    if (s == "both") return Combiner::both;
    if (s == "either") return Combiner::either;
    if (s == "text-only") return Combiner::text_only;
    if (s == "tag-only") return Combiner::tag_only;
    return std::nullopt;
}

/// Thresholds for learning and detection, per channel.
struct DetectionParams {
    double t_detect_text = 2.1;
    double t_detect_tag = 1.8;
    double r_text = 15.0;
    double r_tag = 13.0;
    double t_learn_text = 0.7;
    double t_learn_tag = 0.7;
    Combiner combiner = Combiner::both;

    double t_detect(Channel c) const { return c == Channel::text ? t_detect_text : t_detect_tag; }
    double radius(Channel c) const { return c == Channel::text ? r_text : r_tag; }

    bool valid() const
    {
        return t_detect_text >= 0 && t_detect_tag >= 0 && r_text >= 0 && r_tag >= 0 && t_learn_text >= 0 &&
               t_learn_tag >= 0;
    }

    BuildParams build_params(std::size_t max_observations = 6) const
    {
        BuildParams p;
        p.t_learn_text = t_learn_text;
        p.t_learn_tag = t_learn_tag;
        p.max_observations = max_observations;
        return p;
    }

    friend bool operator==(const DetectionParams&, const DetectionParams&) = default;
};

struct ChannelResult {
    bool rejected = false;
    double distance = 0.0;        // centroid distance to the cluster attaining min_excess
    double min_excess = 0.0;      // min over clusters of d - R - mean - T*stddev
    std::size_t nearest_cluster_index = 0;

    friend bool operator==(const ChannelResult&, const ChannelResult&) = default;
};

/// Outlier test of one fingerprint against one channel's clusters.
/// The view is rejected when d_k - R - mean_k > T * stddev_k holds for every cluster k.
inline ChannelResult channel_test(Simhash64 user, std::span<const Cluster> clusters, double t_detect, double radius)
{
    if (clusters.empty()) {
        throw EmptyModel("channel_test: model has no clusters");
    }
    ChannelResult result;
    result.min_excess = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (std::size_t k = 0; k < clusters.size(); ++k) {
        const double d = centroid_distance(user, clusters[k].centroid);
        const auto st = clusters[k].stats();
        const double lhs = d - radius - st.mean;
        const double rhs = t_detect * st.stddev;
        if (!(lhs > rhs)) {
            accepted = true;
        }
        const double excess = lhs - rhs;
        if (excess < result.min_excess) {
            result.min_excess = excess;
            result.distance = d;
            result.nearest_cluster_index = k;
        }
    }
    result.rejected = !accepted;
    return result;
}

inline bool combine(Combiner c, bool text_rejected, bool tag_rejected)
{
    switch (c) {
    case Combiner::both: return text_rejected && tag_rejected;
    case Combiner::either: return text_rejected || tag_rejected;
    case Combiner::text_only: return text_rejected;
    case Combiner::tag_only: return tag_rejected;
    }
    return text_rejected && tag_rejected;
}

/// Outcome of testing one user view against a model.
struct Verdict {
    std::string url_key;
    ChannelResult text;
    ChannelResult tag;
    bool is_cloaking = false;
    std::size_t text_feature_count = 0;
    std::size_t tag_feature_count = 0;
    Timestamp evaluated_at{};

    friend bool operator==(const Verdict&, const Verdict&) = default;
};

inline Verdict detect(const PageFingerprints& user, const WebsiteModel& model, const DetectionParams& params,
                      Timestamp evaluated_at = now_utc())
{
    Verdict v;
    v.url_key = model.url_key;
    v.text = channel_test(user.text, model.text_clusters, params.t_detect_text, params.r_text);
    v.tag = channel_test(user.tag, model.tag_clusters, params.t_detect_tag, params.r_tag);
    v.is_cloaking = combine(params.combiner, v.text.rejected, v.tag.rejected);
    v.text_feature_count = user.text_feature_count;
    v.tag_feature_count = user.tag_feature_count;
    v.evaluated_at = evaluated_at;
    return v;
}

inline Verdict detect(const PageDocument& user_doc, const WebsiteModel& model, const DetectionParams& params,
                      Timestamp evaluated_at = now_utc())
{
    return detect(fingerprint(user_doc), model, params, evaluated_at);
}

}  // namespace cloakcatch
