#pragma once

#include <chrono>
#include <cstdio>
#include <ctime>
#include <optional>
#include <string>
#include <string_view>

namespace cloakcatch {

/// Wall-clock instant at millisecond resolution (the precision carried on the wire).
using Timestamp = std::chrono::time_point<std::chrono::system_clock, std::chrono::milliseconds>;

inline Timestamp now_utc()
{
    return std::chrono::time_point_cast<std::chrono::milliseconds>(std::chrono::system_clock::now());
}

/// RFC 3339 in UTC, e.g. "2015-02-01T00:00:00Z"; milliseconds are appended only when non-zero.
inline std::string format_rfc3339(Timestamp t)
{
    using namespace std::chrono;
    const auto days = floor<std::chrono::days>(t);
    const year_month_day ymd{days};
    const hh_mm_ss hms{t - days};
    char buf[40];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02lld", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()),
                  static_cast<long long>(hms.seconds().count()));
    std::string out(buf);
    if (const auto ms = hms.subseconds().count(); ms != 0) {
        std::snprintf(buf, sizeof buf, ".%03lld", static_cast<long long>(ms));
        out += buf;
    }
    out.push_back('Z');
    return out;
}

/// Parses "YYYY-MM-DDTHH:MM:SS[.fff...](Z|±HH:MM)". Sub-millisecond digits are truncated.
inline std::optional<Timestamp> parse_rfc3339(std::string_view s)
{
    using namespace std::chrono;
    int y = 0;
    unsigned mo = 0;
    unsigned d = 0;
    int h = 0;
    int mi = 0;
    int sec = 0;
    int consumed = 0;
    const std::string str(s);
    if (std::sscanf(str.c_str(), "%4d-%2u-%2u%*1[Tt ]%2d:%2d:%2d%n", &y, &mo, &d, &h, &mi, &sec, &consumed) != 6) {
        return std::nullopt;
    }
    const year_month_day ymd{year{y}, month{mo}, day{d}};
    if (!ymd.ok() || h > 23 || mi > 59 || sec > 60) {
        return std::nullopt;
    }
    std::size_t i = static_cast<std::size_t>(consumed);
    long long millis = 0;
    if (i < str.size() && str[i] == '.') {
        ++i;
        int digits = 0;
        while (i < str.size() && str[i] >= '0' && str[i] <= '9') {
            if (digits < 3) {
                millis = millis * 10 + (str[i] - '0');
            }
            ++digits;
            ++i;
        }
        if (digits == 0) return std::nullopt;
        for (int k = digits; k < 3; ++k) millis *= 10;
    }
    long offset_minutes = 0;
    if (i < str.size() && (str[i] == 'Z' || str[i] == 'z')) {
        ++i;
    } else if (i < str.size() && (str[i] == '+' || str[i] == '-')) {
        int oh = 0;
        int om = 0;
        if (std::sscanf(str.c_str() + i + 1, "%2d:%2d", &oh, &om) != 2) return std::nullopt;
        offset_minutes = (oh * 60 + om) * (str[i] == '-' ? -1 : 1);
        i += 6;
    } else {
        return std::nullopt;
    }
    if (i != str.size()) return std::nullopt;
    const auto tp = sys_days{ymd} + hours{h} + minutes{mi} + seconds{sec} + milliseconds{millis} - minutes{offset_minutes};
    return time_point_cast<milliseconds>(tp);
}

}  // namespace cloakcatch
