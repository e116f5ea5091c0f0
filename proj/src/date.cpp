#include "latecomer/date.hpp"

#include <charconv>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace latecomer {

namespace {

int parse_int(std::string_view s, std::string_view whole) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size())
        throw std::invalid_argument("invalid date: '" + std::string(whole) + "'");
    return value;
}

Date make_date(int y, int m, int d, std::string_view whole) {
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                          std::chrono::day{static_cast<unsigned>(d)}};
    if (m < 1 || m > 12 || d < 1 || !ymd.ok())
        throw std::invalid_argument("invalid date: '" + std::string(whole) + "'");
    return Date{ymd};
}

} // namespace

Date parse_iso_date(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-')
        throw std::invalid_argument("invalid ISO date: '" + std::string(text) + "'");
    return make_date(parse_int(text.substr(0, 4), text), parse_int(text.substr(5, 2), text),
                     parse_int(text.substr(8, 2), text), text);
}

Date parse_us_short_date(std::string_view text) {
    const auto first = text.find('/');
    const auto second = first == std::string_view::npos ? first : text.find('/', first + 1);
    if (second == std::string_view::npos)
        throw std::invalid_argument("invalid M/D/YY date: '" + std::string(text) + "'");
    const int m = parse_int(text.substr(0, first), text);
    const int d = parse_int(text.substr(first + 1, second - first - 1), text);
    const auto year_part = text.substr(second + 1);
    int y = parse_int(year_part, text);
    if (year_part.size() <= 2)
        y += 2000;
    return make_date(y, m, d, text);
}

std::string format_iso(Date d) {
    const std::chrono::year_month_day ymd{d};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

} // namespace latecomer
