#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace cloakcatch::server {

enum class AgentProfile { googlebot, adsbot, chrome_user };

inline std::string_view to_string(AgentProfile p)
{
    switch (p) {
    case AgentProfile::googlebot: return "googlebot";
    case AgentProfile::adsbot: return "adsbot";
    case AgentProfile::chrome_user: return "chrome_user";
    }
    return "googlebot";
}

inline std::optional<AgentProfile> agent_profile_from_string(std::string_view s)
{
    if (s == "googlebot") return AgentProfile::googlebot;
    if (s == "adsbot") return AgentProfile::adsbot;
    if (s == "chrome_user") return AgentProfile::chrome_user;
    return std::nullopt;
}

inline constexpr std::string_view kGooglebotAgent = "Googlebot/2.1 (+http://www.google.com/bot.html)";
inline constexpr std::string_view kAdsbotAgent = "AdsBot-Google (+http://www.google.com/adsbot.html)";
inline constexpr std::string_view kChromeUserAgent =
    "Mozilla/5.0 (Windows NT 6.3; Win64; x64) AppleWebKit/537.36 (KHTML, like Gecko) "
    "Chrome/37.0.2049.0 Safari/537.36";

/// User-agent string sent for each profile. Overridable from the server config.
struct AgentStrings {
    std::string googlebot{kGooglebotAgent};
    std::string adsbot{kAdsbotAgent};
    std::string chrome_user{kChromeUserAgent};

    const std::string& of(AgentProfile p) const
    {
        switch (p) {
        case AgentProfile::googlebot: return googlebot;
        case AgentProfile::adsbot: return adsbot;
        case AgentProfile::chrome_user: return chrome_user;
        }
        return googlebot;
    }

    friend bool operator==(const AgentStrings&, const AgentStrings&) = default;
};

}  // namespace cloakcatch::server
