#pragma once

#include <charconv>
#include <cstdio>
#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace mmmf {

/// Date (and optional hour) parsed from an ISO-8601-like label.
struct CivilTime {
    std::chrono::year_month_day date;
    int hour = 0;
    bool has_hour = false;
};

namespace detail {

inline std::optional<int> parse_digits(std::string_view s) {
    int v = 0;
    if (s.empty()) return std::nullopt;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
    return v;
}

}  // namespace detail

/// Accepts "YYYY-MM-DD", optionally followed by 'T' or ' ' and "HH", "HH:MM" or "HH:MM:SS".
inline std::optional<CivilTime> parse_civil_time(std::string_view s) {
    if (s.size() < 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    auto y = detail::parse_digits(s.substr(0, 4));
    auto m = detail::parse_digits(s.substr(5, 2));
    auto d = detail::parse_digits(s.substr(8, 2));
    if (!y || !m || !d) return std::nullopt;
    CivilTime out{std::chrono::year{*y} / std::chrono::month{static_cast<unsigned>(*m)} /
                  std::chrono::day{static_cast<unsigned>(*d)}};
    if (!out.date.ok()) return std::nullopt;
    if (s.size() == 10) return out;
    if (s[10] != 'T' && s[10] != ' ') return std::nullopt;
    if (s.size() < 13) return std::nullopt;
    auto h = detail::parse_digits(s.substr(11, 2));
    if (!h || *h < 0 || *h > 23) return std::nullopt;
    if (s.size() > 13 && s[13] != ':') return std::nullopt;
    out.hour = *h;
    out.has_hour = true;
    return out;
}

inline std::string date_label(const std::chrono::year_month_day& d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                  static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
    return buf;
}

/// "YYYY-MM" label of the month containing `d`.
inline std::string month_label(const std::chrono::year_month_day& d) {
    return date_label(d).substr(0, 7);
}

/// 0 = Monday ... 6 = Sunday.
inline int weekday_code(const std::chrono::year_month_day& d) {
    return static_cast<int>(std::chrono::weekday{std::chrono::sys_days{d}}.iso_encoding()) - 1;
}

}  // namespace mmmf
