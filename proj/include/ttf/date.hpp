#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace ttf {

// Calendar date as a day offset from 1970-01-01. All window arithmetic is done
// on this integer; ISO-8601 strings only appear at I/O boundaries.
struct Day {
    std::int32_t value = 0;

    constexpr auto operator<=>(const Day&) const = default;

    constexpr Day operator+(std::int32_t days) const { return Day{value + days}; }
    constexpr Day operator-(std::int32_t days) const { return Day{value - days}; }
    constexpr std::int32_t operator-(Day other) const { return value - other.value; }
};

struct CivilDate {
    int year;
    unsigned month; // 1..12
    unsigned day;   // 1..31
};

// Parses YYYY-MM-DD. Throws Error(parse_error) on malformed or invalid dates.
Day parse_date(std::string_view iso);
std::string format_date(Day day);

Day from_civil(const CivilDate& date);
CivilDate to_civil(Day day);

// 0 = Sunday .. 6 = Saturday
unsigned day_of_week(Day day);
// 1-based
unsigned day_of_year(Day day);
unsigned days_in_month(Day day);

} // namespace ttf
