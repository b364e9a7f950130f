#pragma once

// Character-level helpers shared by the HTML front end: charset decoding,
// UTF-8 iteration, simple case folding, whitespace classification and
// character reference decoding.

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cloakcatch::text {

inline constexpr char32_t kReplacement = 0xFFFD;

inline void append_utf8(std::string& out, char32_t cp)
{
    if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
        cp = kReplacement;
    }
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

/// Decodes one code point starting at `pos` and advances `pos`.
/// Ill-formed sequences yield U+FFFD and consume the maximal invalid subpart.
inline char32_t next_code_point(std::string_view s, std::size_t& pos)
{
    const auto byte = [&](std::size_t i) { return static_cast<unsigned char>(s[i]); };
    const unsigned char lead = byte(pos++);
    if (lead < 0x80) {
        return lead;
    }
    int extra = 0;
    char32_t cp = 0;
    unsigned char lo = 0x80;
    unsigned char hi = 0xBF;
    if (lead >= 0xC2 && lead <= 0xDF) {
        extra = 1;
        cp = lead & 0x1F;
    } else if (lead >= 0xE0 && lead <= 0xEF) {
        extra = 2;
        cp = lead & 0x0F;
        if (lead == 0xE0) lo = 0xA0;
        if (lead == 0xED) hi = 0x9F;
    } else if (lead >= 0xF0 && lead <= 0xF4) {
        extra = 3;
        cp = lead & 0x07;
        if (lead == 0xF0) lo = 0x90;
        if (lead == 0xF4) hi = 0x8F;
    } else {
        return kReplacement;
    }
    for (int i = 0; i < extra; ++i) {
        if (pos >= s.size()) {
            return kReplacement;
        }
        const unsigned char c = byte(pos);
        if (c < lo || c > hi) {
            return kReplacement;
        }
        lo = 0x80;
        hi = 0xBF;
        cp = (cp << 6) | (c & 0x3F);
        ++pos;
    }
    return cp;
}

inline bool is_valid_utf8(std::string_view s)
{
    std::size_t pos = 0;
    while (pos < s.size()) {
        const std::size_t start = pos;
        if (next_code_point(s, pos) == kReplacement) {
            // A literal U+FFFD (EF BF BD) is valid input.
            if (!(pos - start == 3 && s.substr(start, 3) == "\xEF\xBF\xBD")) {
                return false;
            }
        }
    }
    return true;
}

// Upper half of windows-1252; 0x80..0x9F differ from Latin-1.
inline constexpr std::array<char16_t, 32> kWindows1252High = {
    0x20AC, 0x0081, 0x201A, 0x0192, 0x201E, 0x2026, 0x2020, 0x2021,
    0x02C6, 0x2030, 0x0160, 0x2039, 0x0152, 0x008D, 0x017D, 0x008F,
    0x0090, 0x2018, 0x2019, 0x201C, 0x201D, 0x2022, 0x2013, 0x2014,
    0x02DC, 0x2122, 0x0161, 0x203A, 0x0153, 0x009D, 0x017E, 0x0178,
};

enum class Charset { utf8, windows1252 };

inline std::string ascii_lower(std::string_view s)
{
    std::string out(s);
    for (auto& c : out) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

inline std::string_view trim_ascii(std::string_view s)
{
    constexpr std::string_view ws = " \t\r\n\f\v";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

/// Maps a charset label onto a supported decoder; unknown labels fall back to UTF-8.
inline Charset charset_from_label(std::string_view label)
{
    std::string l = ascii_lower(trim_ascii(label));
    if (l.size() >= 2 && (l.front() == '"' || l.front() == '\'')) {
        l = l.substr(1, l.size() - 2);
    }
    static constexpr std::array<std::string_view, 16> latin = {
        "windows-1252", "cp1252", "x-cp1252", "iso-8859-1", "iso8859-1",
        "iso_8859-1", "iso-ir-100", "latin1", "l1", "ibm819", "cp819",
        "us-ascii", "ascii", "ansi_x3.4-1968", "iso88591", "csisolatin1",
    };
    if (std::find(latin.begin(), latin.end(), l) != latin.end()) {
        return Charset::windows1252;
    }
    return Charset::utf8;
}

/// Looks for a <meta charset> / http-equiv charset hint in the first 1024 bytes.
inline std::optional<std::string> sniff_meta_charset(std::string_view bytes)
{
    const std::string head = ascii_lower(bytes.substr(0, std::min<std::size_t>(bytes.size(), 1024)));
    std::size_t pos = 0;
    while ((pos = head.find("charset", pos)) != std::string::npos) {
        pos += 7;
        std::size_t i = pos;
        while (i < head.size() && std::isspace(static_cast<unsigned char>(head[i]))) ++i;
        if (i >= head.size() || head[i] != '=') {
            continue;
        }
        ++i;
        while (i < head.size() && (std::isspace(static_cast<unsigned char>(head[i])) || head[i] == '"' || head[i] == '\'')) ++i;
        std::size_t j = i;
        while (j < head.size() && (std::isalnum(static_cast<unsigned char>(head[j])) || head[j] == '-' || head[j] == '_' || head[j] == '.' || head[j] == ':')) ++j;
        if (j > i) {
            return head.substr(i, j - i);
        }
    }
    return std::nullopt;
}

/// Decodes raw bytes to well-formed UTF-8. Never fails: invalid input becomes U+FFFD.
inline std::string decode_to_utf8(std::string_view bytes, Charset charset)
{
    std::string out;
    out.reserve(bytes.size() + bytes.size() / 8);
    if (charset == Charset::windows1252) {
        for (const char ch : bytes) {
            const auto b = static_cast<unsigned char>(ch);
            if (b < 0x80) {
                out.push_back(ch);
            } else if (b < 0xA0) {
                append_utf8(out, kWindows1252High[b - 0x80]);
            } else {
                append_utf8(out, b);
            }
        }
        return out;
    }
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        const auto b = static_cast<unsigned char>(bytes[pos]);
        if (b < 0x80) {
            // ASCII fast path
            const std::size_t start = pos;
            while (pos < bytes.size() && static_cast<unsigned char>(bytes[pos]) < 0x80) ++pos;
            out.append(bytes.substr(start, pos - start));
            continue;
        }
        append_utf8(out, next_code_point(bytes, pos));
    }
    return out;
}

/// White_Space property.
inline constexpr bool is_space(char32_t cp)
{
    return (cp >= 0x09 && cp <= 0x0D) || cp == 0x20 || cp == 0x85 || cp == 0xA0 || cp == 0x1680 ||
           (cp >= 0x2000 && cp <= 0x200A) || cp == 0x2028 || cp == 0x2029 || cp == 0x202F ||
           cp == 0x205F || cp == 0x3000;
}

/// Simple (1:1) lowercase mapping for the scripts that dominate web text.
inline constexpr char32_t fold_case(char32_t cp)
{
    if (cp < 0x80) {
        return (cp >= 'A' && cp <= 'Z') ? cp + 32 : cp;
    }
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 32;
    if (cp < 0x100) return cp;
    if (cp <= 0x017F) {
        if (cp == 0x0130) return 0x69;
        if (cp == 0x0178) return 0xFF;
        if ((cp <= 0x012F || (cp >= 0x0132 && cp <= 0x0137) || (cp >= 0x014A && cp <= 0x0177)) && cp % 2 == 0) return cp + 1;
        if (((cp >= 0x0139 && cp <= 0x0148) || (cp >= 0x0179 && cp <= 0x017E)) && cp % 2 == 1) return cp + 1;
        return cp;
    }
    if (cp >= 0x0370 && cp <= 0x03FF) {
        if (cp == 0x0386) return 0x03AC;
        if (cp >= 0x0388 && cp <= 0x038A) return cp + 37;
        if (cp == 0x038C) return 0x03CC;
        if (cp == 0x038E || cp == 0x038F) return cp + 63;
        if ((cp >= 0x0391 && cp <= 0x03A1) || (cp >= 0x03A3 && cp <= 0x03AB)) return cp + 32;
        return cp;
    }
    if (cp >= 0x0400 && cp <= 0x052F) {
        if (cp <= 0x040F) return cp + 80;
        if (cp <= 0x042F) return cp + 32;
        if (cp == 0x04C0) return 0x04CF;
        if (((cp >= 0x0460 && cp <= 0x0481) || (cp >= 0x048A && cp <= 0x04BF) || (cp >= 0x04D0 && cp <= 0x052F)) && cp % 2 == 0) return cp + 1;
        if (cp >= 0x04C1 && cp <= 0x04CE && cp % 2 == 1) return cp + 1;
        return cp;
    }
    if (cp >= 0x0531 && cp <= 0x0556) return cp + 48;
    if (((cp >= 0x1E00 && cp <= 0x1E95) || (cp >= 0x1EA0 && cp <= 0x1EFF)) && cp % 2 == 0) return cp + 1;
    if (cp >= 0xFF21 && cp <= 0xFF3A) return cp + 32;
    return cp;
}

/// Splits UTF-8 text on Unicode whitespace, case-folds each token and appends to `out`.
inline void append_words(std::string_view utf8, std::vector<std::string>& out)
{
    std::string current;
    std::size_t pos = 0;
    while (pos < utf8.size()) {
        const auto b = static_cast<unsigned char>(utf8[pos]);
        char32_t cp;
        if (b < 0x80) {
            cp = b;
            ++pos;
        } else {
            cp = next_code_point(utf8, pos);
        }
        if (is_space(cp)) {
            if (!current.empty()) {
                out.push_back(std::move(current));
                current.clear();
            }
            continue;
        }
        if (cp < 0x80) {
            current.push_back(static_cast<char>(cp >= 'A' && cp <= 'Z' ? cp + 32 : cp));
        } else {
            append_utf8(current, fold_case(cp));
        }
    }
    if (!current.empty()) {
        out.push_back(std::move(current));
    }
}

struct NamedReference {
    std::string_view name;
    char32_t code_point;
    bool legacy;  // may appear without the trailing ';'
};

// Sorted by name for binary search.
inline constexpr std::array<NamedReference, 100> kNamedReferences = {{
    {"AElig", 0x00C6, true}, {"Aacute", 0x00C1, true}, {"Agrave", 0x00C0, true},
    {"Auml", 0x00C4, true}, {"Ccedil", 0x00C7, true}, {"Eacute", 0x00C9, true},
    {"Egrave", 0x00C8, true}, {"Ntilde", 0x00D1, true}, {"Oacute", 0x00D3, true},
    {"Ouml", 0x00D6, true}, {"Uacute", 0x00DA, true}, {"Uuml", 0x00DC, true},
    {"aacute", 0x00E1, true}, {"acirc", 0x00E2, true}, {"acute", 0x00B4, true},
    {"aelig", 0x00E6, true}, {"agrave", 0x00E0, true}, {"alpha", 0x03B1, false},
    {"amp", 0x0026, true}, {"apos", 0x0027, false}, {"aring", 0x00E5, true},
    {"atilde", 0x00E3, true}, {"auml", 0x00E4, true}, {"bdquo", 0x201E, false},
    {"beta", 0x03B2, false}, {"brvbar", 0x00A6, true}, {"bull", 0x2022, false},
    {"ccedil", 0x00E7, true}, {"cent", 0x00A2, true}, {"copy", 0x00A9, true},
    {"curren", 0x00A4, true}, {"dagger", 0x2020, false}, {"deg", 0x00B0, true},
    {"divide", 0x00F7, true}, {"eacute", 0x00E9, true}, {"ecirc", 0x00EA, true},
    {"egrave", 0x00E8, true}, {"emsp", 0x2003, false}, {"ensp", 0x2002, false},
    {"euml", 0x00EB, true}, {"euro", 0x20AC, false}, {"frac12", 0x00BD, true},
    {"frac14", 0x00BC, true}, {"frac34", 0x00BE, true}, {"gt", 0x003E, true},
    {"hellip", 0x2026, false}, {"iacute", 0x00ED, true}, {"icirc", 0x00EE, true},
    {"iexcl", 0x00A1, true}, {"igrave", 0x00EC, true}, {"iquest", 0x00BF, true},
    {"iuml", 0x00EF, true}, {"laquo", 0x00AB, true}, {"ldquo", 0x201C, false},
    {"lrm", 0x200E, false}, {"lsaquo", 0x2039, false}, {"lsquo", 0x2018, false},
    {"lt", 0x003C, true}, {"macr", 0x00AF, true}, {"mdash", 0x2014, false},
    {"micro", 0x00B5, true}, {"middot", 0x00B7, true}, {"nbsp", 0x00A0, true},
    {"ndash", 0x2013, false}, {"not", 0x00AC, true}, {"ntilde", 0x00F1, true},
    {"oacute", 0x00F3, true}, {"ocirc", 0x00F4, true}, {"ograve", 0x00F2, true},
    {"ordf", 0x00AA, true}, {"ordm", 0x00BA, true}, {"oslash", 0x00F8, true},
    {"otilde", 0x00F5, true}, {"ouml", 0x00F6, true}, {"para", 0x00B6, true},
    {"permil", 0x2030, false}, {"pi", 0x03C0, false}, {"plusmn", 0x00B1, true},
    {"pound", 0x00A3, true}, {"quot", 0x0022, true}, {"raquo", 0x00BB, true},
    {"rdquo", 0x201D, false}, {"reg", 0x00AE, true}, {"rlm", 0x200F, false},
    {"rsaquo", 0x203A, false}, {"rsquo", 0x2019, false}, {"sbquo", 0x201A, false},
    {"sect", 0x00A7, true}, {"shy", 0x00AD, true}, {"szlig", 0x00DF, true},
    {"thinsp", 0x2009, false}, {"times", 0x00D7, true}, {"trade", 0x2122, false},
    {"uacute", 0x00FA, true}, {"ugrave", 0x00F9, true}, {"uml", 0x00A8, true},
    {"uuml", 0x00FC, true}, {"yen", 0x00A5, true}, {"zwj", 0x200D, false},
    {"zwnj", 0x200C, false},
}};

inline const NamedReference* find_named_reference(std::string_view name)
{
    const auto it = std::lower_bound(kNamedReferences.begin(), kNamedReferences.end(), name,
                                     [](const NamedReference& r, std::string_view n) { return r.name < n; });
    if (it != kNamedReferences.end() && it->name == name) {
        return &*it;
    }
    return nullptr;
}

namespace detail {

inline bool is_ascii_alnum(char c)
{
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

inline char32_t sanitize_numeric_reference(std::uint64_t value)
{
    if (value == 0 || value > 0x10FFFF || (value >= 0xD800 && value <= 0xDFFF)) {
        return kReplacement;
    }
    if (value >= 0x80 && value <= 0x9F) {
        return kWindows1252High[value - 0x80];
    }
    return static_cast<char32_t>(value);
}

}  // namespace detail

/// Decodes HTML character references in text content.
inline std::string decode_character_references(std::string_view s)
{
    if (s.find('&') == std::string_view::npos) {
        return std::string(s);
    }
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        const auto amp = s.find('&', i);
        if (amp == std::string_view::npos) {
            out.append(s.substr(i));
            break;
        }
        out.append(s.substr(i, amp - i));
        i = amp + 1;
        if (i < s.size() && s[i] == '#') {
            std::size_t j = i + 1;
            const bool hex = j < s.size() && (s[j] == 'x' || s[j] == 'X');
            if (hex) ++j;
            const std::size_t digits_begin = j;
            std::uint64_t value = 0;
            while (j < s.size() && (hex ? std::isxdigit(static_cast<unsigned char>(s[j])) : std::isdigit(static_cast<unsigned char>(s[j])))) {
                const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(s[j])));
                const unsigned d = c <= '9' ? static_cast<unsigned>(c - '0') : static_cast<unsigned>(c - 'a' + 10);
                value = std::min<std::uint64_t>(value * (hex ? 16 : 10) + d, 0x110000);
                ++j;
            }
            if (j == digits_begin) {
                out.push_back('&');
                continue;
            }
            if (j < s.size() && s[j] == ';') ++j;
            append_utf8(out, detail::sanitize_numeric_reference(value));
            i = j;
            continue;
        }
        std::size_t j = i;
        while (j < s.size() && j - i < 32 && detail::is_ascii_alnum(s[j])) ++j;
        const std::string_view name = s.substr(i, j - i);
        const NamedReference* ref = name.empty() ? nullptr : find_named_reference(name);
        if (ref != nullptr && j < s.size() && s[j] == ';') {
            append_utf8(out, ref->code_point);
            i = j + 1;
        } else if (ref != nullptr && ref->legacy) {
            append_utf8(out, ref->code_point);
            i = j;
        } else {
            out.push_back('&');
        }
    }
    return out;
}

}  // namespace cloakcatch::text
