#pragma once

#include "cloakcatch/features.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cloakcatch {

inline constexpr int kFingerprintBits = 64;
inline constexpr std::uint64_t kFnvOffsetBasis = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

/// Continues an FNV-1a fold over more bytes.
constexpr std::uint64_t fnv1a_extend(std::uint64_t state, std::string_view bytes) noexcept
{
    for (const char c : bytes) {
        state ^= static_cast<unsigned char>(c);
        state *= kFnvPrime;
    }
    return state;
}

/// FNV-1a, 64-bit, over the UTF-8 bytes of a canonical feature string.
constexpr std::uint64_t hash_feature(std::string_view feature) noexcept
{
    return fnv1a_extend(kFnvOffsetBasis, feature);
}

/// 64-bit Simhash fingerprint.
class Simhash64 {
public:
    constexpr Simhash64() = default;
    constexpr explicit Simhash64(std::uint64_t bits) : bits_(bits) {}

    constexpr std::uint64_t bits() const { return bits_; }
    constexpr bool bit(int i) const { return ((bits_ >> i) & 1U) != 0; }

    /// 16-char lowercase hex, the wire/file encoding.
    std::string hex() const
    {
        static constexpr char digits[] = "0123456789abcdef";
        std::string out(16, '0');
        for (int i = 0; i < 16; ++i) {
            out[static_cast<std::size_t>(15 - i)] = digits[(bits_ >> (4 * i)) & 0xF];
        }
        return out;
    }

    static std::optional<Simhash64> from_hex(std::string_view hex)
    {
        if (hex.size() != 16) {
            return std::nullopt;
        }
        std::uint64_t v = 0;
        for (const char c : hex) {
            int d;
            if (c >= '0' && c <= '9') d = c - '0';
            else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
            else return std::nullopt;
            v = (v << 4) | static_cast<std::uint64_t>(d);
        }
        return Simhash64(v);
    }

    friend constexpr auto operator<=>(const Simhash64&, const Simhash64&) = default;

private:
    std::uint64_t bits_ = 0;
};

constexpr int hamming(Simhash64 a, Simhash64 b) noexcept
{
    return std::popcount(a.bits() ^ b.bits());
}

namespace detail {

/// Per-bit count of set bits over unit-weight feature hashes, kept as one
/// 256-bucket histogram per byte of the hash and expanded to bits at the end.
struct BitTally {
    std::array<std::array<std::uint32_t, 256>, 8> bytes{};
    std::uint32_t total = 0;

    void add(std::uint64_t h) noexcept
    {
        for (std::size_t b = 0; b < 8; ++b) ++bytes[b][(h >> (8 * b)) & 0xFF];
        ++total;
    }

    // Vote for bit i is ones - (total - ones); set iff strictly positive.
    Simhash64 result() const noexcept
    {
        std::uint64_t bits = 0;
        for (std::size_t b = 0; b < 8; ++b) {
            std::array<std::uint64_t, 8> ones{};
            for (std::size_t v = 0; v < 256; ++v) {
                for (std::size_t k = 0; k < 8; ++k) {
                    if ((v >> k) & 1U) ones[k] += bytes[b][v];
                }
            }
            for (std::size_t k = 0; k < 8; ++k) {
                if (2 * ones[k] > total) bits |= std::uint64_t{1} << (8 * b + k);
            }
        }
        return Simhash64(bits);
    }
};

/// Whether two word runs spell the same bytes once joined with single spaces.
/// Only reached when the runs differ word by word, which needs words holding spaces.
[[gnu::noinline]] inline bool same_joined_bytes(std::span<const std::string> a, std::span<const std::string> b)
{
    auto join = [](std::span<const std::string> run) {
        std::string out;
        for (std::size_t i = 0; i < run.size(); ++i) {
            if (i != 0) out.push_back(' ');
            out += run[i];
        }
        return out;
    };
    return join(a) == join(b);
}

}  // namespace detail

/// Weighted bit votes; bit i is set iff its vote total is strictly positive.
inline Simhash64 simhash(const FeatureSet& fs)
{
    const bool unit = std::all_of(fs.begin(), fs.end(), [](const auto& f) { return f.second == 1.0; });
    if (unit) {
        detail::BitTally tally;
        for (const auto& entry : fs) tally.add(hash_feature(entry.first));
        return tally.result();
    }
    std::array<double, kFingerprintBits> votes{};
    for (const auto& [feature, weight] : fs) {
        const std::uint64_t h = hash_feature(feature);
        for (int i = 0; i < kFingerprintBits; ++i) {
            votes[static_cast<std::size_t>(i)] += ((h >> i) & 1U) ? weight : -weight;
        }
    }
    std::uint64_t bits = 0;
    for (int i = 0; i < kFingerprintBits; ++i) {
        if (votes[static_cast<std::size_t>(i)] > 0.0) {
            bits |= std::uint64_t{1} << i;
        }
    }
    return Simhash64(bits);
}

struct TextFingerprint {
    Simhash64 fingerprint;
    std::size_t feature_count = 0;
};

/// Same result as simhash(text_features(words)), without building the
/// string-keyed set. Gram hashes are extended word by word (FNV-1a is a
/// running fold), and grams are deduplicated through an open-addressing table
/// keyed by hash, comparing bytes only when hashes agree.
inline TextFingerprint text_fingerprint(std::span<const std::string> words)
{
    struct Slot {
        std::uint64_t hash = 0;
        std::uint32_t first = 0;   // index of the gram's first word
        std::uint32_t length = 0;  // gram length in words; 0 marks an empty slot
    };
    std::size_t capacity = 16;
    while (capacity < words.size() * 4) capacity <<= 1;
    const std::size_t mask = capacity - 1;
    std::vector<Slot> slots(capacity);

    auto same_gram = [&](const Slot& s, std::size_t first, std::size_t length) {
        if (s.length == length) {
            bool same_words = true;
            for (std::size_t k = 0; k < length && same_words; ++k) same_words = words[s.first + k] == words[first + k];
            if (same_words) return true;
        }
        return detail::same_joined_bytes(words.subspan(s.first, s.length), words.subspan(first, length));
    };

    detail::BitTally tally;
    std::size_t count = 0;
    auto insert = [&](std::uint64_t h, std::size_t first, std::size_t length) {
        for (std::size_t pos = (h ^ (h >> 31)) & mask;; pos = (pos + 1) & mask) {
            Slot& s = slots[pos];
            if (s.length == 0) {
                s = {h, static_cast<std::uint32_t>(first), static_cast<std::uint32_t>(length)};
                tally.add(h);
                ++count;
                return;
            }
            if (s.hash == h && same_gram(s, first, length)) return;
        }
    };
    for (std::size_t i = 0; i < words.size(); ++i) {
        std::uint64_t h = hash_feature(words[i]);
        insert(h, i, 1);
        for (std::size_t n = 2; n <= 3 && i + n - 1 < words.size(); ++n) {
            h = fnv1a_extend(fnv1a_extend(h, " "), words[i + n - 1]);
            insert(h, i, n);
        }
    }
    return {tally.result(), count};
}

struct PageFingerprints {
    Simhash64 text;
    Simhash64 tag;
    std::size_t text_feature_count = 0;
    std::size_t tag_feature_count = 0;
};

inline PageFingerprints fingerprint(const PageFeatures& features)
{
    return {simhash(features.text), simhash(features.tag), features.text.size(), features.tag.size()};
}

inline PageFingerprints fingerprint(const PageDocument& doc)
{
    const auto page = parse_document(doc);
    const auto text = text_fingerprint(visible_words(page));
    const auto tag = tag_features(page);
    return {text.fingerprint, simhash(tag), text.feature_count, tag.size()};
}

}  // namespace cloakcatch
