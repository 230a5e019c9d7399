#include "ttf/ltv.hpp"

#include "ttf/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <tuple>

namespace ttf {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t begin = 0;
    while (true) {
        const std::size_t comma = line.find(',', begin);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(begin));
            return fields;
        }
        fields.push_back(line.substr(begin, comma - begin));
        begin = comma + 1;
    }
}

std::string_view trim_cr(std::string_view line) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
    return line;
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
    if (text.empty()) return false;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc{} && ptr == text.data() + text.size();
}

[[noreturn]] void row_error(std::size_t line_no, const std::string& what) {
    throw Error(ErrorCode::parse_error, "line " + std::to_string(line_no) + ": " + what);
}

std::string curve_key(const ChannelId& channel, Day activation) {
    return channel.value + "@" + format_date(activation);
}

} // namespace

LtvDataset::LtvDataset(std::vector<LtvCurve> curves, HolidayCalendar calendar)
    : calendar_(std::move(calendar)) {
    for (auto& curve : curves) {
        if (curve.channel.value.empty())
            throw Error(ErrorCode::invalid_argument, "empty channel id");
        if (curve.user_count < 1)
            throw Error(ErrorCode::invalid_argument,
                        "user_count must be >= 1 for " + curve_key(curve.channel, curve.activation));
        for (double v : curve.values) {
            if (!std::isfinite(v) || v < 0.0)
                throw Error(ErrorCode::invalid_argument,
                            "negative or non-finite LTV in " + curve_key(curve.channel, curve.activation));
        }
        auto& channel_curves = by_channel_[curve.channel];
        const Day activation = curve.activation;
        auto [it, inserted] = channel_curves.emplace(activation, std::move(curve));
        if (!inserted)
            throw Error(ErrorCode::duplicate_observation,
                        "duplicate curve " + curve_key(it->second.channel, activation));
        ++curve_count_;
    }
}

const LtvCurve* LtvDataset::find(const ChannelId& channel, Day activation) const {
    auto ch = by_channel_.find(channel);
    if (ch == by_channel_.end()) return nullptr;
    auto it = ch->second.find(activation);
    return it == ch->second.end() ? nullptr : &it->second;
}

std::vector<ChannelId> LtvDataset::channels() const {
    std::vector<ChannelId> out;
    out.reserve(by_channel_.size());
    for (const auto& [id, _] : by_channel_) out.push_back(id);
    return out;
}

double ltv_n(const LtvCurve& curve, std::size_t n_days) {
    if (curve.values.size() < n_days)
        throw Error(ErrorCode::insufficient_history,
                    "curve has " + std::to_string(curve.values.size()) + " values, need " + std::to_string(n_days));
    double total = 0.0;
    for (std::size_t i = 0; i < n_days; ++i) total += curve.values[i];
    return total;
}

std::vector<double> slice_curve(const LtvCurve& curve, std::size_t start, std::size_t end) {
    if (start > end || end > curve.values.size())
        throw Error(ErrorCode::out_of_range, "slice [" + std::to_string(start) + ", " + std::to_string(end) +
                                                 ") outside curve of length " + std::to_string(curve.values.size()));
    return {curve.values.begin() + static_cast<std::ptrdiff_t>(start),
            curve.values.begin() + static_cast<std::ptrdiff_t>(end)};
}

LtvDataset parse_dataset(std::istream& in, HolidayCalendar calendar) {
    struct Pending {
        std::map<std::int64_t, double> by_retention;
        std::int64_t user_count = 0;
    };
    std::map<std::pair<ChannelId, Day>, Pending> pending;

    std::string line;
    if (!std::getline(in, line) || trim_cr(line) != kDatasetCsvHeader)
        throw Error(ErrorCode::parse_error, std::string("missing or wrong header, expected '") + kDatasetCsvHeader + "'");

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view row = trim_cr(line);
        if (row.empty()) continue;
        const auto fields = split_fields(row);
        if (fields.size() != 5) row_error(line_no, "expected 5 fields, got " + std::to_string(fields.size()));
        if (fields[0].empty()) row_error(line_no, "empty channel_id");

        Day activation;
        try {
            activation = parse_date(fields[1]);
        } catch (const Error& e) {
            row_error(line_no, e.what());
        }
        std::int64_t retention = 0, users = 0;
        double ltv = 0.0;
        if (!parse_number(fields[2], retention) || retention < 0) row_error(line_no, "bad retention_day");
        if (!parse_number(fields[3], ltv) || !std::isfinite(ltv)) row_error(line_no, "bad ltv");
        if (ltv < 0.0) row_error(line_no, "negative ltv");
        if (!parse_number(fields[4], users) || users < 1) row_error(line_no, "bad user_count");

        auto& p = pending[{ChannelId{std::string(fields[0])}, activation}];
        if (p.user_count != 0 && p.user_count != users) row_error(line_no, "user_count differs within one curve");
        p.user_count = users;
        if (!p.by_retention.emplace(retention, ltv).second)
            throw Error(ErrorCode::duplicate_observation,
                        "line " + std::to_string(line_no) + ": duplicate observation " +
                            std::string(fields[0]) + "," + std::string(fields[1]) + "," + std::string(fields[2]));
    }

    std::vector<LtvCurve> curves;
    curves.reserve(pending.size());
    for (auto& [key, p] : pending) {
        LtvCurve curve{key.first, key.second, {}, p.user_count};
        curve.values.reserve(p.by_retention.size());
        std::int64_t expected = 0;
        for (const auto& [retention, value] : p.by_retention) {
            if (retention != expected)
                throw Error(ErrorCode::retention_gap, "curve " + curve_key(key.first, key.second) +
                                                          " is missing retention day " + std::to_string(expected));
            curve.values.push_back(value);
            ++expected;
        }
        curves.push_back(std::move(curve));
    }
    return LtvDataset(std::move(curves), std::move(calendar));
}

LtvDataset load_dataset(const std::filesystem::path& csv_path) {
    std::ifstream in(csv_path);
    if (!in) throw Error(ErrorCode::io_error, "cannot open " + csv_path.string());
    return parse_dataset(in);
}

LtvDataset load_dataset(const std::filesystem::path& csv_path, const std::filesystem::path& holidays_path) {
    std::ifstream in(csv_path);
    if (!in) throw Error(ErrorCode::io_error, "cannot open " + csv_path.string());
    return parse_dataset(in, load_holidays(holidays_path));
}

std::string format_real(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc{}) throw Error(ErrorCode::internal, "cannot format real");
    return std::string(buf, ptr);
}

void write_dataset(const LtvDataset& dataset, std::ostream& out) {
    out << kDatasetCsvHeader << '\n';
    for (const auto& [channel, curves] : dataset.by_channel()) {
        for (const auto& [activation, curve] : curves) {
            const std::string date = format_date(activation);
            for (std::size_t i = 0; i < curve.values.size(); ++i) {
                out << channel.value << ',' << date << ',' << i << ',' << format_real(curve.values[i]) << ','
                    << curve.user_count << '\n';
            }
        }
    }
}

void save_dataset(const LtvDataset& dataset, const std::filesystem::path& csv_path) {
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw Error(ErrorCode::io_error, "cannot write " + csv_path.string());
    write_dataset(dataset, out);
    if (!out) throw Error(ErrorCode::io_error, "write failed for " + csv_path.string());
}

HolidayCalendar parse_holidays(std::istream& in) {
    std::set<Day> dates;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view row = trim_cr(line);
        if (const auto hash = row.find('#'); hash != std::string_view::npos) row = trim_cr(row.substr(0, hash));
        while (!row.empty() && row.front() == ' ') row.remove_prefix(1);
        if (row.empty()) continue;
        try {
            dates.insert(parse_date(row));
        } catch (const Error& e) {
            throw Error(ErrorCode::parse_error, "holidays line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return HolidayCalendar(std::move(dates));
}

HolidayCalendar load_holidays(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
    return parse_holidays(in);
}

void write_holidays(const HolidayCalendar& calendar, std::ostream& out) {
    out << "# holiday calendar, one ISO-8601 date per line\n";
    for (Day d : calendar.dates()) out << format_date(d) << '\n';
}

} // namespace ttf
