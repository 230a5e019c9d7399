#include "ttf/date.hpp"

#include "ttf/error.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>

namespace ttf {

namespace {

namespace chr = std::chrono;

chr::sys_days to_sys(Day day) { return chr::sys_days{chr::days{day.value}}; }

bool parse_uint(std::string_view text, int& out) {
    if (text.empty()) return false;
    for (char c : text)
        if (c < '0' || c > '9') return false;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc{} && ptr == text.data() + text.size();
}

} // namespace

Day parse_date(std::string_view iso) {
    int y = 0, m = 0, d = 0;
    if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-' ||
        !parse_uint(iso.substr(0, 4), y) || !parse_uint(iso.substr(5, 2), m) ||
        !parse_uint(iso.substr(8, 2), d)) {
        throw Error(ErrorCode::parse_error, "malformed date '" + std::string(iso) + "'");
    }
    chr::year_month_day ymd{chr::year{y}, chr::month{static_cast<unsigned>(m)},
                            chr::day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) throw Error(ErrorCode::parse_error, "invalid calendar date '" + std::string(iso) + "'");
    return Day{static_cast<std::int32_t>(chr::sys_days{ymd}.time_since_epoch().count())};
}

std::string format_date(Day day) {
    const CivilDate c = to_civil(day);
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", c.year, c.month, c.day);
    return buf;
}

Day from_civil(const CivilDate& date) {
    chr::year_month_day ymd{chr::year{date.year}, chr::month{date.month}, chr::day{date.day}};
    if (!ymd.ok()) throw Error(ErrorCode::invalid_argument, "invalid civil date");
    return Day{static_cast<std::int32_t>(chr::sys_days{ymd}.time_since_epoch().count())};
}

CivilDate to_civil(Day day) {
    chr::year_month_day ymd{to_sys(day)};
    return {static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
            static_cast<unsigned>(ymd.day())};
}

unsigned day_of_week(Day day) { return chr::weekday{to_sys(day)}.c_encoding(); }

unsigned day_of_year(Day day) {
    const CivilDate c = to_civil(day);
    return static_cast<unsigned>(day - from_civil({c.year, 1, 1})) + 1;
}

unsigned days_in_month(Day day) {
    chr::year_month_day ymd{to_sys(day)};
    return static_cast<unsigned>(chr::year_month_day_last{ymd.year(), chr::month_day_last{ymd.month()}}.day());
}

} // namespace ttf
