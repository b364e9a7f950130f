#include "cloakcatch/eval.hpp"

#include <gtest/gtest.h>

using namespace cloakcatch;
using namespace cloakcatch::eval;

namespace {

EvalCorpusSpec small_spec(double churn, double cloak_fraction, std::uint64_t seed = 3)
{
    EvalCorpusSpec s;
    s.n_sites = 80;
    s.churn = churn;
    s.cloak_fraction = cloak_fraction;
    s.seed = seed;
    return s;
}

}  // namespace

TEST(EvalCorpus, CloakedCountMatchesFraction)
{
    const auto corpus = generate_corpus(small_spec(0.1, 0.25), BuildParams{});
    ASSERT_EQ(corpus.size(), 80u);
    std::size_t cloaked = 0;
    for (const auto& c : corpus) {
        cloaked += c.cloaked ? 1 : 0;
        EXPECT_EQ(c.model.observation_count, 6u);
    }
    EXPECT_EQ(cloaked, 20u);
}

TEST(EvalCorpus, StaticSitesReplayExactly)
{
    for (const auto& c : generate_corpus(small_spec(0.0, 0.0), BuildParams{})) {
        ASSERT_EQ(c.model.text_clusters.size(), 1u);
        ASSERT_EQ(c.model.tag_clusters.size(), 1u);
        EXPECT_EQ(centroid_distance(c.user.text, c.model.text_clusters[0].centroid), 0.0);
        EXPECT_EQ(centroid_distance(c.user.tag, c.model.tag_clusters[0].centroid), 0.0);
    }
}

TEST(EvalCorpus, RejectsOutOfRangeSpec)
{
    EXPECT_THROW(generate_corpus(small_spec(1.5, 0.1), BuildParams{}), ConfigError);
    EXPECT_THROW(generate_corpus(small_spec(0.1, -0.1), BuildParams{}), ConfigError);
}

TEST(Eval, NoDynamicsSeparatesPerfectly)
{
    const auto r = run_eval(small_spec(0.0, 0.5), DetectionParams{});
    EXPECT_EQ(r.combined.tpr(), 1.0);
    EXPECT_EQ(r.combined.fpr(), 0.0);
}

TEST(Eval, NoPositivesReportsUndefinedTpr)
{
    const auto r = run_eval(small_spec(0.1, 0.0), DetectionParams{});
    EXPECT_FALSE(r.combined.tpr().has_value());
    ASSERT_TRUE(r.combined.fpr().has_value());
    const auto table = format_table(r);
    EXPECT_NE(table.find("n/a"), std::string::npos);
    EXPECT_NE(format_csv(r).find("n/a"), std::string::npos);
}

TEST(Eval, FixedSeedIsByteIdentical)
{
    const auto a = run_eval(small_spec(0.1, 0.25, 11), DetectionParams{});
    const auto b = run_eval(small_spec(0.1, 0.25, 11), DetectionParams{});
    EXPECT_EQ(format_table(a), format_table(b));
    EXPECT_EQ(format_csv(a), format_csv(b));
    const auto c = run_eval(small_spec(0.1, 0.25, 12), DetectionParams{});
    EXPECT_NE(format_table(a), format_table(c));
}

TEST(Eval, RocIsMonotoneInRadius)
{
    const auto r = run_eval(small_spec(0.1, 0.3), DetectionParams{});
    ASSERT_GE(r.roc.size(), 2u);
    for (std::size_t i = 1; i < r.roc.size(); ++i) {
        const auto& prev = r.roc[i - 1];
        const auto& cur = r.roc[i];
        ASSERT_LT(prev.radius, cur.radius);
        for (auto pick : {&RocPoint::text, &RocPoint::tag, &RocPoint::combined}) {
            EXPECT_LE((cur.*pick).tp, (prev.*pick).tp);
            EXPECT_LE((cur.*pick).fp, (prev.*pick).fp);
        }
    }
}

TEST(Eval, DefaultRowMatchesDirectDetection)
{
    const auto spec = small_spec(0.1, 0.25);
    const DetectionParams params;
    const auto corpus = generate_corpus(spec, params.build_params());
    Confusion want;
    for (const auto& c : corpus) {
        want.add(c.cloaked, detect(c.user, c.model, params, Timestamp{}).is_cloaking);
    }
    const auto r = evaluate(corpus, spec, params);
    EXPECT_EQ(r.combined.tp, want.tp);
    EXPECT_EQ(r.combined.fp, want.fp);
    EXPECT_EQ(r.combined.tn, want.tn);
    EXPECT_EQ(r.combined.fn, want.fn);
}
