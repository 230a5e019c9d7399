#pragma once

#include "ttf/ltv.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace ttf {

// value(c, t, i) = base_c * (i+1)^(-beta_c) * weekly_c(t+i) * holiday(t+i) * drift_c(t+i) * eps
// eps ~ lognormal(0, volatility^2); drift_c is a product of persistent level
// shifts drawn per channel-month with probability drift_prob.
struct GeneratorConfig {
    int channels = 6;
    Day first_date = parse_date("2021-01-01");
    Day last_date = parse_date("2023-06-30"); // last activation date (inclusive)
    std::uint64_t seed = 7;
    double volatility = 0.15;
    double holiday_boost = 0.5;
    double drift_prob = 0.1;
    double drift_sigma = 0.15;
    std::pair<double, double> decay_exponent_range{0.3, 0.9};
    std::pair<double, double> base_range{0.5, 5.0};
    std::pair<double, double> weekly_amplitude_range{0.05, 0.25};
    std::pair<std::int64_t, std::int64_t> user_count_range{200, 5000};
    int curve_length = 90;

    void validate() const; // throws invalid_config
};

nlohmann::json to_json(const GeneratorConfig& config);
GeneratorConfig generator_config_from_json(const nlohmann::json& j);

// Fixed-date holidays (Jan 1, Feb 14, May 1, Jun 18, Oct 1-3, Nov 11, Dec 12,
// Dec 25) for every year touching [first, last].
HolidayCalendar default_holidays(Day first, Day last);

struct ChannelParameters {
    double base = 0.0;
    double decay_exponent = 0.0;
    double weekly_amplitude = 0.0;
    double weekly_phase = 0.0;
};

// The per-channel shape parameters generate() draws, in channel order.
std::vector<ChannelParameters> channel_parameters(const GeneratorConfig& cfg);

// Pure function of (cfg, calendar). Channels are named ch01, ch02, ...
LtvDataset generate(const GeneratorConfig& cfg, const HolidayCalendar& calendar);

struct ChannelSummary {
    ChannelId channel;
    std::size_t curves = 0;
    Day first_activation{};
    Day last_activation{};
    double mean_value = 0.0;
    double median_value = 0.0;
    double coefficient_of_variation = 0.0;
};

struct DatasetSummary {
    std::size_t channel_count = 0;
    std::size_t activation_date_count = 0; // distinct activation dates
    std::size_t max_curve_length = 0;
    std::size_t curve_count = 0;
    double mean_value = 0.0;
    double coefficient_of_variation = 0.0; // over every value in the dataset
    std::vector<ChannelSummary> channels;
};

DatasetSummary describe(const LtvDataset& dataset);
nlohmann::json to_json(const DatasetSummary& summary);

} // namespace ttf
