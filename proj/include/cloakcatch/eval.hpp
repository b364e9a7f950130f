#pragma once

// Synthetic labeled corpus and ROC sweep used by `cloakcatch eval`.
//
// Every site gets a random template (element tree, attribute names, topical
// vocabulary). Spider views of a site differ from each other by rewritten
// "dynamic slots" (runs of words covering the churn fraction) and by a few
// optional widgets. A clean site's user view is one more such crawl; a cloaked
// site's user view is an unrelated template.

#include "cloakcatch/detector.hpp"
#include "cloakcatch/error.hpp"
#include "cloakcatch/simhash.hpp"
#include "cloakcatch/swm.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace cloakcatch::eval {

struct EvalCorpusSpec {
    std::size_t n_sites = 400;
    double churn = 0.1;           // fraction of words rewritten per crawl
    double cloak_fraction = 0.25;
    std::uint64_t seed = 1;
    std::size_t spider_views = 6;

    void validate() const
    {
        if (!(churn >= 0.0 && churn <= 1.0)) throw ConfigError("churn must lie in [0,1]");
        if (!(cloak_fraction >= 0.0 && cloak_fraction <= 1.0)) throw ConfigError("cloak_fraction must lie in [0,1]");
        if (spider_views == 0) throw ConfigError("spider_views must be positive");
    }
};

namespace detail {

/// SplitMix64: tiny, portable and fully specified, so reports are identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next()
    {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::size_t below(std::size_t n) { return static_cast<std::size_t>(next() % n); }

    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    bool chance(double p) { return unit() < p; }

private:
    std::uint64_t state_;
};

inline constexpr const char* kContainerTags[] = {"div",    "section", "article", "aside", "nav", "header",
                                                 "footer", "main",    "figure",  "form",  "ul",  "blockquote"};
inline constexpr const char* kTextTags[] = {"p", "h2", "h3", "h4", "span", "em", "strong", "small", "label", "cite"};
inline constexpr const char* kAttributeNames[] = {
    "class",     "id",         "style",    "role",       "title",      "lang",       "dir",
    "data-id",   "data-role",  "data-src", "data-track", "aria-label", "aria-hidden", "itemprop",
    "itemscope", "itemtype",   "tabindex", "hidden",     "draggable",  "data-ga",    "data-slot",
    "onclick",   "data-name",  "rel",      "translate",  "data-page",  "accesskey",  "contenteditable"};
inline constexpr const char* kWidgetTags[] = {"iframe", "ins", "img", "video", "object"};

/// Word-like token for a vocabulary id (same id, same token). Letters follow
/// rough English frequencies; some tokens carry trailing punctuation or are
/// numbers, as in real page text.
inline std::string spell(std::uint64_t id)
{
    static constexpr std::string_view letters = "eeeeeeeeeeeetttttttttaaaaaaaaoooooooiiiiiiinnnnnnnssssss"
                                                "hhhhhhrrrrrrddddllllcccuuummwwffggyyppbbvkjxqz";
    static constexpr std::string_view punctuation = ",,,,..:;)!?\"'";
    Rng r(id * 0x9e3779b97f4a7c15ULL + 17);
    if (r.chance(0.04)) return std::to_string(r.below(3000));
    std::string w;
    const std::size_t len = 1 + r.below(4) + r.below(5);
    for (std::size_t i = 0; i < len; ++i) w += letters[r.below(letters.size())];
    if (r.chance(0.12)) w += punctuation[r.below(punctuation.size())];
    return w;
}

inline std::string pick_attributes(Rng& rng, std::size_t max_count)
{
    std::string out;
    const std::size_t n = rng.below(max_count + 1);
    for (std::size_t i = 0; i < n; ++i) {
        out += ' ';
        out += kAttributeNames[rng.below(std::size(kAttributeNames))];
        out += "=\"v";
        out += std::to_string(rng.below(1000));
        out += '"';
    }
    return out;
}

struct Leaf {
    std::string open;   // "<p class=..." without '>'
    std::string close;  // "</p>"
    std::size_t first_word;
    std::size_t word_count;
};

struct Piece {
    enum Kind { markup, leaf, widget } kind;
    std::string markup_text;
    std::size_t index = 0;
};

/// One site's template: fixed markup with word slots and optional widgets.
struct SiteTemplate {
    std::vector<Piece> pieces;
    std::vector<Leaf> leaves;
    std::vector<std::string> widgets;
    std::vector<std::string> base_words;
    std::vector<bool> dynamic;  // per word position
    std::vector<std::uint32_t> topic;
    std::uint64_t site_id = 0;

    std::string word(Rng& rng) const
    {
        // Some words come from a vocabulary shared by every site.
        if (rng.chance(0.15)) {
            return spell(rng.below(500));
        }
        return spell(1000 + topic[rng.below(topic.size())]);
    }
};

inline SiteTemplate make_template(Rng& rng, double churn)
{
    SiteTemplate t;
    t.site_id = rng.next();
    const std::size_t topic_size = 250 + rng.below(250);
    for (std::size_t i = 0; i < topic_size; ++i) t.topic.push_back(static_cast<std::uint32_t>(rng.below(200000)));

    const auto emit = [&](std::string s) { t.pieces.push_back({Piece::markup, std::move(s), 0}); };
    emit("<!DOCTYPE html><html" + pick_attributes(rng, 1) + "><head><meta charset=\"utf-8\"><title>");
    t.leaves.push_back({"", "", 0, 3 + rng.below(5)});
    t.pieces.push_back({Piece::leaf, {}, 0});
    emit("</title>");
    for (std::size_t i = rng.below(4); i > 0; --i) {
        emit(std::string(rng.chance(0.5) ? "<meta" : "<link") + pick_attributes(rng, 3) + ">");
    }
    emit("</head><body" + pick_attributes(rng, 2) + ">");

    std::size_t word_total = t.leaves[0].word_count;
    const std::size_t sections = 3 + rng.below(6);
    for (std::size_t s = 0; s < sections; ++s) {
        std::vector<std::string> closers;
        const std::size_t depth = 1 + rng.below(3);
        for (std::size_t d = 0; d < depth; ++d) {
            std::string tag = kContainerTags[rng.below(std::size(kContainerTags))];
            if (tag == "ul") tag = "div";  // keep list items out of the leaf model
            emit("<" + tag + pick_attributes(rng, 2) + ">");
            closers.push_back("</" + tag + ">");
        }
        const std::size_t leaves = 1 + rng.below(5);
        for (std::size_t l = 0; l < leaves; ++l) {
            const std::string tag = kTextTags[rng.below(std::size(kTextTags))];
            Leaf leaf{"<" + tag + pick_attributes(rng, 2) + ">", "</" + tag + ">", word_total, 8 + rng.below(40)};
            word_total += leaf.word_count;
            t.pieces.push_back({Piece::leaf, {}, t.leaves.size()});
            t.leaves.push_back(std::move(leaf));
            if (rng.chance(0.3)) {
                emit("<a href=\"/x\"" + pick_attributes(rng, 1) + ">link " + std::to_string(rng.below(50)) + "</a>");
            }
            if (rng.chance(0.15) && t.widgets.size() < 4) {
                // Optional widget (ad slot, embed): present or absent per crawl.
                std::string w = "<div" + pick_attributes(rng, 2) + "><";
                const std::string wt = kWidgetTags[rng.below(std::size(kWidgetTags))];
                w += wt + pick_attributes(rng, 3) + ">";
                if (wt != "img") w += "</" + wt + ">";
                w += "</div>";
                t.pieces.push_back({Piece::widget, {}, t.widgets.size()});
                t.widgets.push_back(std::move(w));
            }
        }
        for (auto it = closers.rbegin(); it != closers.rend(); ++it) emit(*it);
    }
    emit("</body></html>");

    for (std::size_t i = 0; i < word_total; ++i) t.base_words.push_back(t.word(rng));

    // Dynamic slots: runs of 4-12 words at fixed positions until the churn share is covered.
    t.dynamic.assign(word_total, false);
    const auto target = static_cast<std::size_t>(std::llround(churn * static_cast<double>(word_total)));
    std::size_t covered = 0;
    while (covered < target) {
        const std::size_t run = std::min<std::size_t>(4 + rng.below(9), target - covered);
        std::size_t start = rng.below(word_total);
        for (std::size_t k = 0; k < run; ++k) {
            const std::size_t pos = (start + k) % word_total;
            if (!t.dynamic[pos]) {
                t.dynamic[pos] = true;
                ++covered;
            }
        }
    }
    return t;
}

/// One crawl of a site: dynamic slots redrawn and widgets toggled (only when the site is dynamic).
inline std::string render(const SiteTemplate& t, Rng& rng, bool dynamic)
{
    std::vector<std::string> words = t.base_words;
    if (dynamic) {
        for (std::size_t i = 0; i < words.size(); ++i) {
            if (t.dynamic[i]) words[i] = t.word(rng);
        }
    }
    std::string html;
    for (const auto& p : t.pieces) {
        switch (p.kind) {
        case Piece::markup:
            html += p.markup_text;
            break;
        case Piece::widget:
            if (!dynamic || rng.chance(0.5)) html += t.widgets[p.index];
            break;
        case Piece::leaf: {
            const Leaf& leaf = t.leaves[p.index];
            html += leaf.open;
            for (std::size_t w = 0; w < leaf.word_count; ++w) {
                if (w) html += ' ';
                html += words[leaf.first_word + w];
            }
            html += leaf.close;
            break;
        }
        }
    }
    return html;
}

}  // namespace detail

struct SiteCase {
    bool cloaked = false;
    WebsiteModel model;
    PageFingerprints user;
};

/// Deterministic corpus: site i depends only on (seed, i).
inline std::vector<SiteCase> generate_corpus(const EvalCorpusSpec& spec, const BuildParams& build)
{
    spec.validate();
    std::vector<SiteCase> out;
    out.reserve(spec.n_sites);
    const auto n_cloaked =
        static_cast<std::size_t>(std::llround(spec.cloak_fraction * static_cast<double>(spec.n_sites)));
    for (std::size_t i = 0; i < spec.n_sites; ++i) {
        detail::Rng rng(spec.seed * 0x2545f4914f6cdd1dULL + i);
        const auto site = detail::make_template(rng, spec.churn);
        const bool dynamic = spec.churn > 0.0;
        std::vector<Observation> text;
        std::vector<Observation> tag;
        for (std::size_t v = 0; v < spec.spider_views; ++v) {
            const auto fp = fingerprint(PageDocument{detail::render(site, rng, dynamic), "utf-8", ""});
            text.push_back({fp.text, Timestamp{}, fp.text_feature_count});
            tag.push_back({fp.tag, Timestamp{}, fp.tag_feature_count});
        }
        SiteCase c;
        // Cloaked sites are spread evenly through the index range.
        c.cloaked = n_cloaked > 0 && (i * n_cloaked) / spec.n_sites != ((i + 1) * n_cloaked) / spec.n_sites;
        c.model = build_model("site" + std::to_string(i) + "/", text, tag, build, Timestamp{});
        if (c.cloaked) {
            const auto other = detail::make_template(rng, 0.0);
            c.user = fingerprint(PageDocument{detail::render(other, rng, false), "utf-8", ""});
        } else {
            c.user = fingerprint(PageDocument{detail::render(site, rng, dynamic), "utf-8", ""});
        }
        out.push_back(std::move(c));
    }
    return out;
}

struct Confusion {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

    void add(bool truth, bool predicted)
    {
        if (truth) (predicted ? tp : fn)++;
        else (predicted ? fp : tn)++;
    }

    std::optional<double> tpr() const
    {
        if (tp + fn == 0) return std::nullopt;
        return static_cast<double>(tp) / static_cast<double>(tp + fn);
    }

    std::optional<double> fpr() const
    {
        if (fp + tn == 0) return std::nullopt;
        return static_cast<double>(fp) / static_cast<double>(fp + tn);
    }
};

struct RocPoint {
    double radius = 0.0;
    Confusion text;      // text channel alone at R_text = radius
    Confusion tag;       // tag channel alone at R_tag = radius
    Confusion combined;  // configured combiner, both radii = radius
};

struct EvalReport {
    EvalCorpusSpec spec;
    DetectionParams params;
    Confusion text;
    Confusion tag;
    Confusion combined;
    std::vector<RocPoint> roc;
};

inline std::vector<double> default_radius_grid()
{
    std::vector<double> g;
    for (int r = 0; r <= 40; r += 2) g.push_back(r);
    return g;
}

inline EvalReport evaluate(const std::vector<SiteCase>& corpus, const EvalCorpusSpec& spec,
                           const DetectionParams& params, const std::vector<double>& grid = default_radius_grid())
{
    EvalReport report{spec, params, {}, {}, {}, {}};
    const auto run = [&](const SiteCase& c, double r_text, double r_tag, Confusion* text, Confusion* tag,
                         Confusion* combined) {
        const bool t = channel_test(c.user.text, c.model.text_clusters, params.t_detect_text, r_text).rejected;
        const bool g = channel_test(c.user.tag, c.model.tag_clusters, params.t_detect_tag, r_tag).rejected;
        if (text) text->add(c.cloaked, t);
        if (tag) tag->add(c.cloaked, g);
        if (combined) combined->add(c.cloaked, combine(params.combiner, t, g));
    };
    for (const auto& c : corpus) {
        run(c, params.r_text, params.r_tag, &report.text, &report.tag, &report.combined);
    }
    for (const double r : grid) {
        RocPoint p;
        p.radius = r;
        for (const auto& c : corpus) {
            run(c, r, params.r_tag, &p.text, nullptr, nullptr);
            run(c, params.r_text, r, nullptr, &p.tag, nullptr);
            run(c, r, r, nullptr, nullptr, &p.combined);
        }
        report.roc.push_back(p);
    }
    return report;
}

inline EvalReport run_eval(const EvalCorpusSpec& spec, const DetectionParams& params)
{
    const auto corpus = generate_corpus(spec, params.build_params(spec.spider_views));
    return evaluate(corpus, spec, params);
}

inline std::string format_rate(const std::optional<double>& v)
{
    if (!v) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", *v);
    return buf;
}

inline std::string format_table(const EvalReport& r)
{
    std::ostringstream os;
    char line[160];
    std::snprintf(line, sizeof line, "sites=%zu churn=%.3f cloak_fraction=%.3f seed=%llu combiner=%s\n",
                  r.spec.n_sites, r.spec.churn, r.spec.cloak_fraction, static_cast<unsigned long long>(r.spec.seed),
                  std::string(to_string(r.params.combiner)).c_str());
    os << line;
    std::snprintf(line, sizeof line, "R_text=%g R_tag=%g T_text=%g T_tag=%g\n\n", r.params.r_text, r.params.r_tag,
                  r.params.t_detect_text, r.params.t_detect_tag);
    os << line;
    os << "channel    TP   FP   TN   FN  TPR     FPR\n";
    const auto row = [&](const char* name, const Confusion& c) {
        std::snprintf(line, sizeof line, "%-8s %4zu %4zu %4zu %4zu  %-7s %s\n", name, c.tp, c.fp, c.tn, c.fn,
                      format_rate(c.tpr()).c_str(), format_rate(c.fpr()).c_str());
        os << line;
    };
    row("text", r.text);
    row("tag", r.tag);
    row("combined", r.combined);
    os << "\nROC (R swept; other parameters fixed)\n";
    os << "    R  text_TPR text_FPR  tag_TPR  tag_FPR  comb_TPR comb_FPR\n";
    for (const auto& p : r.roc) {
        std::snprintf(line, sizeof line, "%5g  %-8s %-8s  %-8s %-8s  %-8s %s\n", p.radius,
                      format_rate(p.text.tpr()).c_str(), format_rate(p.text.fpr()).c_str(),
                      format_rate(p.tag.tpr()).c_str(), format_rate(p.tag.fpr()).c_str(),
                      format_rate(p.combined.tpr()).c_str(), format_rate(p.combined.fpr()).c_str());
        os << line;
    }
    return os.str();
}

inline std::string format_csv(const EvalReport& r)
{
    std::ostringstream os;
    os << "radius,text_tpr,text_fpr,tag_tpr,tag_fpr,combined_tpr,combined_fpr\n";
    for (const auto& p : r.roc) {
        char line[160];
        std::snprintf(line, sizeof line, "%g,%s,%s,%s,%s,%s,%s\n", p.radius, format_rate(p.text.tpr()).c_str(),
                      format_rate(p.text.fpr()).c_str(), format_rate(p.tag.tpr()).c_str(),
                      format_rate(p.tag.fpr()).c_str(), format_rate(p.combined.tpr()).c_str(),
                      format_rate(p.combined.fpr()).c_str());
        os << line;
    }
    return os.str();
}

}  // namespace cloakcatch::eval
