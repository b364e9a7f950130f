#pragma once

// Text-channel and tag-channel feature extraction.
//
// Canonical feature strings (shared bit-for-bit with every client):
//   text  : a case-folded word, or 2-3 consecutive words joined by one U+0020
//   tag   : node feature  "<tag>;<attr1>,<attr2>,..."  (attribute names sorted,
//                          lowercase, values dropped; "<tag>;" when none)
//           edge feature  "(<child-tag>,<parent-tag>)"

#include "cloakcatch/html.hpp"
#include "cloakcatch/text.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace cloakcatch {

/// One fetched page as delivered by a fetcher or read from disk.
struct PageDocument {
    std::string raw_bytes;
    std::optional<std::string> declared_charset;
    std::string final_url;
};

enum class Channel { text, tag };

inline constexpr std::string_view to_string(Channel c)
{
    return c == Channel::text ? "text" : "tag";
}

/// Weighted set of canonical feature strings for one channel of one page view.
class FeatureSet {
public:
    using Map = std::unordered_map<std::string, double>;

    explicit FeatureSet(Channel channel) : channel_(channel) {}

    Channel channel() const { return channel_; }

    /// Adds `feature` unless already present. Weight must be positive.
    bool insert(std::string feature, double weight = 1.0)
    {
        if (!(weight > 0.0)) {
            throw std::invalid_argument("feature weight must be positive");
        }
        return features_.try_emplace(std::move(feature), weight).second;
    }

    bool contains(std::string_view feature) const { return features_.find(std::string(feature)) != features_.end(); }
    std::size_t size() const { return features_.size(); }
    bool empty() const { return features_.empty(); }
    void reserve(std::size_t n) { features_.reserve(n); }

    Map::const_iterator begin() const { return features_.begin(); }
    Map::const_iterator end() const { return features_.end(); }

    friend bool operator==(const FeatureSet&, const FeatureSet&) = default;

private:
    Channel channel_;
    Map features_;
};

/// Decodes the document to UTF-8 using its declared (or sniffed) charset.
/// A leading UTF-8 byte order mark wins over any declaration and is dropped.
inline std::string decode_document(const PageDocument& doc)
{
    constexpr std::string_view bom = "\xEF\xBB\xBF";
    if (std::string_view(doc.raw_bytes).substr(0, 3) == bom) {
        return text::decode_to_utf8(std::string_view(doc.raw_bytes).substr(3), text::Charset::utf8);
    }
    std::optional<std::string> label = doc.declared_charset;
    if (!label || text::trim_ascii(*label).empty()) {
        label = text::sniff_meta_charset(doc.raw_bytes);
    }
    const auto charset = label ? text::charset_from_label(*label) : text::Charset::utf8;
    return text::decode_to_utf8(doc.raw_bytes, charset);
}

inline html::ParsedPage parse_document(const PageDocument& doc)
{
    return html::parse(decode_document(doc));
}

inline std::vector<std::string> visible_words(const html::ParsedPage& page)
{
    std::vector<std::string> words;
    for (const auto& node : page.text_nodes) {
        text::append_words(node, words);
    }
    return words;
}

/// Case-folded visible words in document order; script/style/noscript/template text excluded.
inline std::vector<std::string> visible_words(const PageDocument& doc)
{
    return visible_words(parse_document(doc));
}

/// Unigrams, bigrams and trigrams of the word sequence, weight 1 each.
inline FeatureSet text_features(std::span<const std::string> words)
{
    FeatureSet fs(Channel::text);
    fs.reserve(words.size() * 3);
    std::string gram;
    for (std::size_t i = 0; i < words.size(); ++i) {
        fs.insert(words[i]);
        if (i + 1 < words.size()) {
            gram.assign(words[i]).append(" ").append(words[i + 1]);
            fs.insert(gram);
            if (i + 2 < words.size()) {
                gram.append(" ").append(words[i + 2]);
                fs.insert(gram);
            }
        }
    }
    return fs;
}

inline std::string node_feature(const html::Element& e)
{
    std::string f = e.name;
    f.push_back(';');
    for (std::size_t i = 0; i < e.attribute_names.size(); ++i) {
        if (i != 0) f.push_back(',');
        f += e.attribute_names[i];
    }
    return f;
}

inline std::string edge_feature(std::string_view child, std::string_view parent)
{
    std::string f;
    f.reserve(child.size() + parent.size() + 3);
    f.append("(").append(child).append(",").append(parent).append(")");
    return f;
}

inline FeatureSet tag_features(const html::ParsedPage& page)
{
    FeatureSet fs(Channel::tag);
    for (const auto& e : page.elements) {
        if (e.in_template) {
            continue;
        }
        fs.insert(node_feature(e));
        if (e.parent >= 0) {
            fs.insert(edge_feature(e.name, page.elements[static_cast<std::size_t>(e.parent)].name));
        }
    }
    return fs;
}

inline FeatureSet tag_features(const PageDocument& doc)
{
    return tag_features(parse_document(doc));
}

struct PageFeatures {
    FeatureSet text{Channel::text};
    FeatureSet tag{Channel::tag};
};

/// Both channels from a single parse.
inline PageFeatures extract_features(const PageDocument& doc)
{
    const auto page = parse_document(doc);
    const auto words = visible_words(page);
    return PageFeatures{text_features(words), tag_features(page)};
}

}  // namespace cloakcatch
