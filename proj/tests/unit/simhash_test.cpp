#include "cloakcatch/simhash.hpp"

#include "support/oracles.hpp"
#include "support/pages.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

using namespace cloakcatch;

namespace {

std::string random_feature(std::mt19937_64& rng)
{
    return "f" + std::to_string(rng());
}

FeatureSet make_set(const std::vector<std::string>& features)
{
    FeatureSet fs(Channel::text);
    for (const auto& f : features) fs.insert(f);
    return fs;
}

}  // namespace

TEST(HashFeature, EmptyStringIsOffsetBasis)
{
    EXPECT_EQ(hash_feature(""), 0xcbf29ce484222325ULL);
    static_assert(hash_feature("") == 0xcbf29ce484222325ULL);
}

TEST(HashFeature, PublishedVectors)
{
    EXPECT_EQ(hash_feature("a"), 0xaf63dc4c8601ec8cULL);
    EXPECT_EQ(hash_feature("foobar"), 0x85944171f73967e8ULL);
}

TEST(HashFeature, MatchesShiftAddOracle)
{
    std::mt19937_64 rng(1);
    for (const char* s : {"foobar", "html;", "(head,html)", "i am a", "\xC3\xA9t\xC3\xA9"}) {
        EXPECT_EQ(hash_feature(s), oracle::fnv1a64_shift_add(s)) << s;
    }
    for (int i = 0; i < 1000; ++i) {
        std::string s(rng() % 40, '\0');
        for (auto& c : s) c = static_cast<char>(rng() & 0xFF);
        EXPECT_EQ(hash_feature(s), oracle::fnv1a64_shift_add(s));
    }
}

TEST(Simhash, EmptySetIsZero)
{
    EXPECT_EQ(simhash(FeatureSet(Channel::tag)).bits(), 0u);
}

TEST(Simhash, SingletonEqualsFeatureHash)
{
    for (const char* f : {"a", "foobar", "div;class,id"}) {
        EXPECT_EQ(simhash(make_set({f})).bits(), hash_feature(f));
    }
}

TEST(Simhash, MatchesReferenceImplementation)
{
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::string> f;
        const auto n = 1 + rng() % 60;
        for (std::size_t i = 0; i < n; ++i) f.push_back(random_feature(rng));
        std::sort(f.begin(), f.end());
        f.erase(std::unique(f.begin(), f.end()), f.end());
        EXPECT_EQ(simhash(make_set(f)).bits(), oracle::simhash_reference(f));
    }
}

TEST(Simhash, WeightsShiftVotes)
{
    // Two features with complementary bits at position i: the heavier one wins.
    FeatureSet fs(Channel::text);
    fs.insert("a", 3.0);
    fs.insert("b", 1.0);
    const auto ha = hash_feature("a");
    const auto hb = hash_feature("b");
    const auto s = simhash(fs);
    for (int i = 0; i < 64; ++i) {
        const bool a = (ha >> i) & 1U;
        const bool b = (hb >> i) & 1U;
        if (a != b) {
            EXPECT_EQ(s.bit(i), a) << i;
        }
    }
}

TEST(Simhash, OrderIndependence)
{
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::string> f;
        for (int i = 0; i < 100; ++i) f.push_back(random_feature(rng));
        auto g = f;
        std::shuffle(g.begin(), g.end(), rng);
        EXPECT_EQ(simhash(make_set(f)), simhash(make_set(g)));
    }
}

TEST(Simhash, DisjointSetsAreHalfApart)
{
    std::mt19937_64 rng(2024);
    double total = 0;
    constexpr int trials = 1000;
    for (int t = 0; t < trials; ++t) {
        std::vector<std::string> a;
        std::vector<std::string> b;
        for (int i = 0; i < 500; ++i) {
            a.push_back("a" + std::to_string(rng()));
            b.push_back("b" + std::to_string(rng()));
        }
        total += hamming(simhash(make_set(a)), simhash(make_set(b))) / 64.0;
    }
    EXPECT_NEAR(total / trials, 0.5, 0.03);
}

TEST(Simhash, MonotoneSensitivity)
{
    std::mt19937_64 rng(77);
    const std::vector<int> percents = {0, 5, 10, 20, 40, 60, 80, 100};
    std::vector<double> mean(percents.size(), 0.0);
    constexpr int trials = 60;
    for (int t = 0; t < trials; ++t) {
        std::vector<std::string> base;
        for (int i = 0; i < 1000; ++i) base.push_back(random_feature(rng));
        const auto h0 = simhash(make_set(base));
        for (std::size_t k = 0; k < percents.size(); ++k) {
            auto mod = base;
            for (int i = 0; i < percents[k] * 10; ++i) mod[static_cast<std::size_t>(i)] = "r" + random_feature(rng);
            mean[k] += hamming(h0, simhash(make_set(mod)));
        }
    }
    for (std::size_t k = 1; k < mean.size(); ++k) {
        EXPECT_LE(mean[k - 1], mean[k]) << percents[k];
    }
    EXPECT_EQ(mean[0], 0.0);
}

TEST(TextFingerprint, AgreesWithFeatureSetPath)
{
    std::mt19937_64 rng(606);
    // A tiny vocabulary forces repeated grams, and words holding spaces let
    // different word runs spell the same gram ("a b"+"c" and "a"+"b"+"c").
    static const std::vector<std::string> vocab = {"a", "b", "ab", "a b", "c", "bc", "", "b ", "\xC3\xA9t\xC3\xA9", "cheap"};
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<std::string> words(rng() % 60);
        for (auto& w : words) w = vocab[rng() % (trial % 2 ? 3 : vocab.size())];
        const auto fast = text_fingerprint(words);
        const auto fs = text_features(words);
        EXPECT_EQ(fast.fingerprint, simhash(fs)) << trial;
        EXPECT_EQ(fast.feature_count, fs.size()) << trial;
    }
}

TEST(TextFingerprint, DocumentPathMatchesExtractedFeatures)
{
    for (const std::size_t kb : {1, 64, 256}) {
        const PageDocument doc{pages::sized_page(kb * 1024, kb), std::nullopt, ""};
        const auto a = fingerprint(doc);
        const auto b = fingerprint(extract_features(doc));
        EXPECT_EQ(a.text, b.text) << kb;
        EXPECT_EQ(a.tag, b.tag) << kb;
        EXPECT_EQ(a.text_feature_count, b.text_feature_count) << kb;
        EXPECT_EQ(a.tag_feature_count, b.tag_feature_count) << kb;
    }
}

TEST(Hamming, IdentityComplementAndOracle)
{
    EXPECT_EQ(hamming(Simhash64(0x1234), Simhash64(0x1234)), 0);
    EXPECT_EQ(hamming(Simhash64(0), Simhash64(~0ULL)), 64);
    std::mt19937_64 rng(3);
    for (int i = 0; i < 10000; ++i) {
        const auto a = rng();
        const auto b = rng();
        const auto c = rng();
        EXPECT_EQ(hamming(Simhash64(a), Simhash64(b)), oracle::hamming_bit_loop(a, b));
        EXPECT_EQ(hamming(Simhash64(a), Simhash64(b)), hamming(Simhash64(b), Simhash64(a)));
        EXPECT_LE(hamming(Simhash64(a), Simhash64(c)),
                  hamming(Simhash64(a), Simhash64(b)) + hamming(Simhash64(b), Simhash64(c)));
    }
}

TEST(Simhash64Hex, RoundTripAndFormat)
{
    EXPECT_EQ(Simhash64(0).hex(), "0000000000000000");
    EXPECT_EQ(Simhash64(0xaf63dc4c8601ec8cULL).hex(), "af63dc4c8601ec8c");
    EXPECT_FALSE(Simhash64::from_hex("AF63DC4C8601EC8C").has_value());  // lowercase only
    EXPECT_FALSE(Simhash64::from_hex("abc").has_value());
    std::mt19937_64 rng(4);
    for (int i = 0; i < 100; ++i) {
        const Simhash64 s(rng());
        EXPECT_EQ(Simhash64::from_hex(s.hex()), s);
    }
}
