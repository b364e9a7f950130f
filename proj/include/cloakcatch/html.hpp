#pragma once

// Error-recovering HTML parser. The tokenizer follows the HTML tokenization
// states closely enough for real-world tag soup; the tree builder is a
// reduced HTML5 tree construction: it synthesizes html/head/body, applies the
// common implied-end-tag rules and inserts implied table sections. It records
// element nesting and visible text only, which is all the feature extractors
// need.

#include "cloakcatch/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace cloakcatch::html {

struct Element {
    std::string name;
    std::vector<std::string> attribute_names;  // lowercase, sorted, unique after finish()
    int parent = -1;
    bool in_template = false;  // inside <template> contents (not part of the DOM tree)
};

struct ParsedPage {
    std::vector<Element> elements;        // document order
    std::vector<std::string> text_nodes;  // visible text, decoded, document order
};

namespace detail {

inline bool is_ascii_alpha(char c)
{
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

inline bool is_html_space(char c)
{
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f';
}

inline char lower(char c)
{
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c + 32) : c;
}

template <std::size_t N>
bool one_of(std::string_view name, const std::array<std::string_view, N>& set)
{
    return std::find(set.begin(), set.end(), name) != set.end();
}

inline constexpr std::array<std::string_view, 16> kVoid = {
    "area", "base", "basefont", "bgsound", "br", "col", "embed", "hr",
    "img", "image", "input", "keygen", "link", "meta", "source", "track",
};
inline constexpr std::array<std::string_view, 3> kVoidExtra = {"param", "wbr", "frame"};

inline bool is_void(std::string_view name)
{
    return one_of(name, kVoid) || one_of(name, kVoidExtra);
}

inline constexpr std::array<std::string_view, 7> kRawText = {
    "script", "style", "xmp", "iframe", "noembed", "noframes", "noscript",
};
inline constexpr std::array<std::string_view, 2> kEscapableRawText = {"title", "textarea"};

// Text below these never counts as visible.
inline constexpr std::array<std::string_view, 4> kInvisible = {"script", "style", "noscript", "template"};

inline constexpr std::array<std::string_view, 11> kHeadContent = {
    "base", "basefont", "bgsound", "link", "meta", "title", "noscript",
    "noframes", "style", "script", "template",
};

inline constexpr std::array<std::string_view, 40> kClosesParagraph = {
    "address", "article", "aside", "blockquote", "center", "details", "dialog", "dir",
    "div", "dl", "fieldset", "figcaption", "figure", "footer", "form", "h1",
    "h2", "h3", "h4", "h5", "h6", "header", "hgroup", "hr",
    "listing", "main", "menu", "nav", "ol", "p", "plaintext", "pre",
    "search", "section", "summary", "table", "ul", "li", "dd", "dt",
};

inline constexpr std::array<std::string_view, 6> kHeadings = {"h1", "h2", "h3", "h4", "h5", "h6"};

inline constexpr std::array<std::string_view, 10> kButtonScope = {
    "applet", "caption", "html", "table", "td", "th", "marquee", "object", "template", "button",
};

inline constexpr std::array<std::string_view, 3> kTableSections = {"tbody", "thead", "tfoot"};

/// Builds the element list incrementally from tokenizer events.
class TreeBuilder {
public:
    explicit TreeBuilder(ParsedPage& page) : page_(page) {}

    void start_tag(std::string name, std::vector<std::string> attrs, bool self_closing)
    {
        if (template_depth_ > 0) {
            // Template contents form a detached fragment: no head/body transitions.
            if (name != "html" && name != "body" && name != "head") {
                in_body_start(std::move(name), std::move(attrs), self_closing);
            }
            return;
        }
        for (;;) {
            switch (mode_) {
            case Mode::initial:
                if (name == "html") {
                    html_ = insert(std::move(name), std::move(attrs), -1);
                    stack_.push_back(html_);
                    mode_ = Mode::before_head;
                    return;
                }
                ensure_html();
                continue;
            case Mode::before_head:
                if (name == "html") {
                    merge_attributes(html_, attrs);
                    return;
                }
                if (name == "head") {
                    head_ = insert(std::move(name), std::move(attrs), html_);
                    push(head_);
                    mode_ = Mode::in_head;
                    return;
                }
                head_ = insert("head", {}, html_);
                push(head_);
                mode_ = Mode::in_head;
                continue;
            case Mode::in_head:
                if (name == "html") {
                    merge_attributes(html_, attrs);
                    return;
                }
                if (name == "head") {
                    return;
                }
                if (one_of(name, kHeadContent)) {
                    insert_in_place(std::move(name), std::move(attrs), self_closing);
                    return;
                }
                close_head();
                continue;
            case Mode::after_head:
                if (name == "html") {
                    merge_attributes(html_, attrs);
                    return;
                }
                if (name == "body" || name == "frameset") {
                    body_ = insert(std::move(name), std::move(attrs), html_);
                    push(body_);
                    mode_ = Mode::in_body;
                    return;
                }
                if (name == "head") {
                    return;
                }
                if (one_of(name, kHeadContent)) {
                    const int e = insert(std::move(name), std::move(attrs), head_);
                    if (!is_void(page_.elements[static_cast<std::size_t>(e)].name)) {
                        push(e);
                    }
                    return;
                }
                ensure_body();
                continue;
            case Mode::in_body:
                in_body_start(std::move(name), std::move(attrs), self_closing);
                return;
            }
        }
    }

    void end_tag(std::string_view name)
    {
        if (mode_ != Mode::in_body && template_depth_ == 0) {
            if (mode_ == Mode::in_head && name == "head") {
                close_head();
                return;
            }
            // Raw-text elements opened before the body close normally.
            if (!stack_.empty() && element_name(stack_.back()) == name && name != "html" && name != "head") {
                pop();
                return;
            }
            if (name == "br") {
                start_tag("br", {}, false);
            }
            return;
        }
        if (name == "html" || name == "body" || name == "head") {
            return;
        }
        if (name == "br") {
            in_body_start("br", {}, false);
            return;
        }
        if (name == "p" && !in_scope("p", kButtonScope)) {
            insert(std::string("p"), {}, current());
            return;
        }
        for (std::size_t i = stack_.size(); i-- > 0;) {
            const std::string& n = element_name(stack_[i]);
            if (n == name) {
                while (stack_.size() > i) {
                    pop();
                }
                return;
            }
            if (n == "html" || n == "body" || n == "template") {
                return;
            }
        }
    }

    /// `raw` marks content of a raw-text/RCDATA element, which always belongs to the current node.
    void text(std::string_view content, bool raw)
    {
        if (content.empty()) {
            return;
        }
        if (!raw && mode_ != Mode::in_body && template_depth_ == 0) {
            const bool blank = std::all_of(content.begin(), content.end(), is_html_space);
            if (blank) {
                return;
            }
            ensure_body();
        }
        if (invisible_depth_ == 0) {
            page_.text_nodes.push_back(raw && !rcdata_ ? std::string(content) : text::decode_character_references(content));
        }
    }

    /// Name of the innermost open element, empty before <html>.
    std::string_view current_name() const
    {
        return stack_.empty() ? std::string_view{} : std::string_view(element_name(stack_.back()));
    }

    /// Called by the tokenizer before emitting RCDATA (title/textarea) content.
    void set_rcdata(bool v) { rcdata_ = v; }

    void finish()
    {
        for (auto& e : page_.elements) {
            auto& a = e.attribute_names;
            std::sort(a.begin(), a.end());
            a.erase(std::unique(a.begin(), a.end()), a.end());
        }
    }

private:
    enum class Mode { initial, before_head, in_head, after_head, in_body };

    const std::string& element_name(int idx) const { return page_.elements[static_cast<std::size_t>(idx)].name; }

    int current() const { return stack_.empty() ? -1 : stack_.back(); }

    int insert(std::string name, std::vector<std::string> attrs, int parent)
    {
        Element e;
        e.name = std::move(name);
        e.attribute_names = std::move(attrs);
        e.parent = parent;
        e.in_template = template_depth_ > 0;
        page_.elements.push_back(std::move(e));
        return static_cast<int>(page_.elements.size() - 1);
    }

    void push(int idx)
    {
        stack_.push_back(idx);
        const std::string& n = element_name(idx);
        if (one_of(n, kInvisible)) ++invisible_depth_;
        if (n == "template") ++template_depth_;
        if (n == "svg" || n == "math") ++foreign_depth_;
    }

    void pop()
    {
        const std::string& n = element_name(stack_.back());
        if (one_of(n, kInvisible)) --invisible_depth_;
        if (n == "template") --template_depth_;
        if (n == "svg" || n == "math") --foreign_depth_;
        stack_.pop_back();
    }

    void pop_until(std::string_view name)
    {
        while (!stack_.empty() && element_name(stack_.back()) != "html") {
            const bool hit = element_name(stack_.back()) == name;
            pop();
            if (hit) {
                return;
            }
        }
    }

    template <std::size_t N>
    bool in_scope(std::string_view target, const std::array<std::string_view, N>& boundaries) const
    {
        for (std::size_t i = stack_.size(); i-- > 0;) {
            const std::string& n = element_name(stack_[i]);
            if (n == target) return true;
            if (one_of(n, boundaries)) return false;
        }
        return false;
    }

    bool has_open(std::string_view target) const
    {
        for (std::size_t i = stack_.size(); i-- > 0;) {
            const std::string& n = element_name(stack_[i]);
            if (n == target) return true;
            if (n == "template" || n == "html") return false;
        }
        return false;
    }

    void merge_attributes(int idx, std::vector<std::string>& attrs)
    {
        if (idx < 0) return;
        auto& a = page_.elements[static_cast<std::size_t>(idx)].attribute_names;
        a.insert(a.end(), attrs.begin(), attrs.end());
    }

    void ensure_html()
    {
        if (html_ < 0) {
            html_ = insert("html", {}, -1);
            stack_.push_back(html_);
            mode_ = Mode::before_head;
        }
    }

    void close_head()
    {
        pop_until("head");
        mode_ = Mode::after_head;
    }

    void ensure_body()
    {
        if (mode_ == Mode::in_body) return;
        ensure_html();
        if (mode_ == Mode::before_head) {
            head_ = insert("head", {}, html_);
            mode_ = Mode::after_head;
        } else if (mode_ == Mode::in_head) {
            close_head();
        }
        body_ = insert("body", {}, html_);
        push(body_);
        mode_ = Mode::in_body;
    }

    void insert_in_place(std::string name, std::vector<std::string> attrs, bool self_closing)
    {
        const bool is_void_element = is_void(name);
        const bool foreign = foreign_depth_ > 0 || name == "svg" || name == "math";
        const int e = insert(std::move(name), std::move(attrs), current());
        if (!is_void_element && !(self_closing && foreign)) {
            push(e);
        }
    }

    void close_paragraph_if_open()
    {
        if (in_scope("p", kButtonScope)) {
            pop_until("p");
        }
    }

    void in_body_start(std::string name, std::vector<std::string> attrs, bool self_closing)
    {
        if (name == "html") {
            merge_attributes(html_, attrs);
            return;
        }
        if (name == "body") {
            merge_attributes(body_, attrs);
            return;
        }
        if (name == "head" || name == "frameset") {
            return;
        }
        if (name == "image") {
            name = "img";
        }
        if (foreign_depth_ == 0) {
            apply_implied_ends(name);
        }
        insert_in_place(std::move(name), std::move(attrs), self_closing);
    }

    void apply_implied_ends(std::string_view name)
    {
        if (name == "li" || name == "dd" || name == "dt") {
            for (std::size_t i = stack_.size(); i-- > 0;) {
                const std::string& n = element_name(stack_[i]);
                const bool match = name == "li" ? n == "li" : (n == "dd" || n == "dt");
                if (match) {
                    const std::string target = n;
                    pop_until(target);
                    break;
                }
                if (n != "address" && n != "div" && n != "p" && (one_of(n, kClosesParagraph) || one_of(n, kButtonScope) || n == "body")) {
                    break;
                }
            }
        }
        if (one_of(name, kClosesParagraph)) {
            close_paragraph_if_open();
        }
        if (one_of(name, kHeadings) && !stack_.empty() && one_of(element_name(stack_.back()), kHeadings)) {
            pop();
        }
        if (name == "option" || name == "optgroup") {
            if (!stack_.empty() && element_name(stack_.back()) == "option") pop();
            if (name == "optgroup" && !stack_.empty() && element_name(stack_.back()) == "optgroup") pop();
        }
        if (name == "a" || name == "nobr" || name == "button" || name == "form") {
            if (has_open(name)) pop_until(name);
        }
        if (!has_open("table")) {
            return;
        }
        const auto clear_to = [&](auto&& stop) {
            while (!stack_.empty()) {
                const std::string& n = element_name(stack_.back());
                if (stop(n) || n == "html" || n == "template") return;
                pop();
            }
        };
        if (name == "tr") {
            clear_to([](const std::string& n) { return n == "table" || one_of(n, kTableSections); });
            if (element_name(current()) == "table") {
                push(insert("tbody", {}, current()));
            }
        } else if (name == "td" || name == "th") {
            clear_to([](const std::string& n) { return n == "tr" || n == "table" || one_of(n, kTableSections); });
            if (element_name(current()) == "table") {
                push(insert("tbody", {}, current()));
            }
            if (one_of(element_name(current()), kTableSections)) {
                push(insert("tr", {}, current()));
            }
        } else if (one_of(name, kTableSections) || name == "caption" || name == "colgroup") {
            clear_to([](const std::string& n) { return n == "table"; });
        } else if (name == "col") {
            clear_to([](const std::string& n) { return n == "table" || n == "colgroup"; });
            if (element_name(current()) == "table") {
                push(insert("colgroup", {}, current()));
            }
        }
    }

    ParsedPage& page_;
    std::vector<int> stack_;
    Mode mode_ = Mode::initial;
    int html_ = -1;
    int head_ = -1;
    int body_ = -1;
    int invisible_depth_ = 0;
    int template_depth_ = 0;
    int foreign_depth_ = 0;
    bool rcdata_ = false;
};

/// Finds "</name" (ASCII case-insensitive) followed by a tag-name terminator.
inline std::size_t find_closing_tag(std::string_view s, std::size_t from, std::string_view name)
{
    std::size_t pos = from;
    while ((pos = s.find("</", pos)) != std::string_view::npos) {
        const std::size_t name_begin = pos + 2;
        if (name_begin + name.size() > s.size()) {
            return std::string_view::npos;
        }
        bool match = true;
        for (std::size_t k = 0; k < name.size(); ++k) {
            if (lower(s[name_begin + k]) != name[k]) {
                match = false;
                break;
            }
        }
        const std::size_t after = name_begin + name.size();
        if (match && (after == s.size() || is_html_space(s[after]) || s[after] == '/' || s[after] == '>')) {
            return pos;
        }
        pos = name_begin;
    }
    return std::string_view::npos;
}

}  // namespace detail

/// Parses UTF-8 HTML. Never rejects input; malformed markup is recovered the way browsers do.
inline ParsedPage parse(std::string_view s)
{
    ParsedPage page;
    detail::TreeBuilder builder(page);
    using detail::is_ascii_alpha;
    using detail::is_html_space;
    using detail::lower;

    std::size_t i = 0;
    std::size_t text_begin = 0;
    const auto flush_text = [&](std::size_t end) {
        if (end > text_begin) {
            builder.text(s.substr(text_begin, end - text_begin), false);
        }
    };
    // Skips to just past the next '>' (or EOF), used for comments-like constructs.
    const auto skip_past = [&](std::size_t from, std::string_view terminator) {
        const auto e = s.find(terminator, from);
        return e == std::string_view::npos ? s.size() : e + terminator.size();
    };

    while (i < s.size()) {
        const auto lt = s.find('<', i);
        if (lt == std::string_view::npos || lt + 1 >= s.size()) {
            break;
        }
        const char next = s[lt + 1];
        if (next == '!') {
            flush_text(lt);
            if (s.substr(lt + 2, 2) == "--") {
                if (s.substr(lt + 4, 1) == ">") {
                    i = lt + 5;
                } else if (s.substr(lt + 4, 2) == "->") {
                    i = lt + 6;
                } else {
                    i = skip_past(lt + 4, "-->");
                }
            } else {
                i = skip_past(lt + 2, ">");
            }
            text_begin = i;
            continue;
        }
        if (next == '?') {
            flush_text(lt);
            i = text_begin = skip_past(lt + 2, ">");
            continue;
        }
        const bool closing = next == '/';
        const std::size_t name_begin = lt + (closing ? 2 : 1);
        if (name_begin >= s.size()) {
            break;
        }
        if (!is_ascii_alpha(s[name_begin])) {
            if (closing) {
                flush_text(lt);
                // "</>" is dropped; anything else after "</" is a bogus comment.
                i = text_begin = skip_past(name_begin, ">");
            } else {
                i = lt + 1;  // stray '<' is text
            }
            continue;
        }
        std::size_t j = name_begin;
        std::string name;
        while (j < s.size() && !is_html_space(s[j]) && s[j] != '/' && s[j] != '>') {
            name.push_back(lower(s[j]));
            ++j;
        }
        // Attributes.
        std::vector<std::string> attrs;
        bool self_closing = false;
        bool complete = false;
        while (j < s.size()) {
            const char c = s[j];
            if (is_html_space(c)) {
                ++j;
                continue;
            }
            if (c == '>') {
                complete = true;
                ++j;
                break;
            }
            if (c == '/') {
                ++j;
                if (j < s.size() && s[j] == '>') {
                    self_closing = true;
                }
                continue;
            }
            std::string attr;
            attr.push_back(lower(c));
            ++j;
            while (j < s.size() && !is_html_space(s[j]) && s[j] != '/' && s[j] != '>' && s[j] != '=') {
                attr.push_back(lower(s[j]));
                ++j;
            }
            while (j < s.size() && is_html_space(s[j])) ++j;
            if (j < s.size() && s[j] == '=') {
                ++j;
                while (j < s.size() && is_html_space(s[j])) ++j;
                if (j < s.size() && (s[j] == '"' || s[j] == '\'')) {
                    const auto close = s.find(s[j], j + 1);
                    j = close == std::string_view::npos ? s.size() : close + 1;
                } else {
                    while (j < s.size() && !is_html_space(s[j]) && s[j] != '>') ++j;
                }
            }
            attrs.push_back(std::move(attr));
        }
        if (!complete) {
            // EOF inside a tag drops the tag.
            flush_text(lt);
            text_begin = s.size();
            break;
        }
        flush_text(lt);
        i = text_begin = j;
        if (closing) {
            builder.end_tag(name);
            continue;
        }
        const bool raw = detail::one_of(name, detail::kRawText);
        const bool rcdata = detail::one_of(name, detail::kEscapableRawText);
        const bool plaintext = name == "plaintext";
        const std::string tag_name = name;
        builder.start_tag(std::move(name), std::move(attrs), self_closing);
        if (plaintext && builder.current_name() == tag_name) {
            builder.text(s.substr(i), false);
            i = text_begin = s.size();
            break;
        }
        // Raw-text mode applies only when the element was actually opened
        // (self-closing raw elements stay closed in foreign content).
        if ((raw || rcdata) && builder.current_name() == tag_name) {
            const auto close = detail::find_closing_tag(s, i, tag_name);
            const std::size_t content_end = close == std::string_view::npos ? s.size() : close;
            builder.set_rcdata(rcdata);
            builder.text(s.substr(i, content_end - i), true);
            builder.set_rcdata(false);
            if (close == std::string_view::npos) {
                i = text_begin = s.size();
                break;
            }
            builder.end_tag(tag_name);
            i = text_begin = skip_past(close, ">");
        }
    }
    flush_text(s.size());
    builder.finish();
    return page;
}

}  // namespace cloakcatch::html
