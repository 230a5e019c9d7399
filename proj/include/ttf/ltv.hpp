#pragma once

#include "ttf/date.hpp"

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace ttf {

struct ChannelId {
    std::string value;

    auto operator<=>(const ChannelId&) const = default;
};

// Daily LTV of one (channel, activation date) cohort indexed by retention day;
// values[0] is the activation date itself.
struct LtvCurve {
    ChannelId channel;
    Day activation;
    std::vector<double> values;
    std::int64_t user_count = 1;
};

class HolidayCalendar {
public:
    HolidayCalendar() = default;
    explicit HolidayCalendar(std::set<Day> dates) : dates_(std::move(dates)) {}

    bool contains(Day day) const { return dates_.count(day) != 0; }
    const std::set<Day>& dates() const { return dates_; }
    bool empty() const { return dates_.empty(); }

private:
    std::set<Day> dates_;
};

// Immutable after construction. At most one curve per (channel, activation).
class LtvDataset {
public:
    using ChannelCurves = std::map<Day, LtvCurve>;

    LtvDataset() = default;
    // Validates every curve; throws duplicate_observation / invalid_argument.
    explicit LtvDataset(std::vector<LtvCurve> curves, HolidayCalendar calendar = {});

    const LtvCurve* find(const ChannelId& channel, Day activation) const;
    const std::map<ChannelId, ChannelCurves>& by_channel() const { return by_channel_; }
    std::vector<ChannelId> channels() const;
    std::size_t curve_count() const { return curve_count_; }
    bool empty() const { return curve_count_ == 0; }
    const HolidayCalendar& calendar() const { return calendar_; }

private:
    std::map<ChannelId, ChannelCurves> by_channel_;
    HolidayCalendar calendar_;
    std::size_t curve_count_ = 0;
};

// Cumulative LTV over retention days [0, n_days).
double ltv_n(const LtvCurve& curve, std::size_t n_days);

// Half-open slice [start, end) of the curve values.
std::vector<double> slice_curve(const LtvCurve& curve, std::size_t start, std::size_t end);

inline constexpr const char* kDatasetCsvHeader = "channel_id,activation_date,retention_day,ltv,user_count";

LtvDataset parse_dataset(std::istream& in, HolidayCalendar calendar = {});
LtvDataset load_dataset(const std::filesystem::path& csv_path);
LtvDataset load_dataset(const std::filesystem::path& csv_path, const std::filesystem::path& holidays_path);

// Canonical serialization: channel id, activation date, retention day ascending.
void write_dataset(const LtvDataset& dataset, std::ostream& out);
void save_dataset(const LtvDataset& dataset, const std::filesystem::path& csv_path);

HolidayCalendar parse_holidays(std::istream& in);
HolidayCalendar load_holidays(const std::filesystem::path& path);
void write_holidays(const HolidayCalendar& calendar, std::ostream& out);

// Shortest decimal text that round-trips to the same double.
std::string format_real(double value);

} // namespace ttf
