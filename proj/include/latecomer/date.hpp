#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace latecomer {

/// Calendar day. Arithmetic is in whole days.
using Date = std::chrono::sys_days;

/// Parses `YYYY-MM-DD`. Throws std::invalid_argument on anything else.
Date parse_iso_date(std::string_view text);

/// Parses the JHU header style `M/D/YY` (two-digit years are 20YY).
Date parse_us_short_date(std::string_view text);

std::string format_iso(Date d);

inline Date add_days(Date d, int days) { return d + std::chrono::days{days}; }

inline int days_between(Date from, Date to) { return static_cast<int>((to - from).count()); }

} // namespace latecomer
