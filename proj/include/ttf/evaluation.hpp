#pragma once

#include "ttf/ltv.hpp"
#include "ttf/trapezoid.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ttf {

// Forecast of one cohort: predicted/actual cover retention days m..m+n-1,
// observed_prefix covers 0..m-1.
struct PredictionRecord {
    ChannelId channel;
    Day activation;
    std::vector<double> predicted;
    std::vector<double> actual;
    std::vector<double> observed_prefix;
    std::int64_t user_count = 1;
};

// |actual| below this is excluded from the pointwise mean.
inline constexpr double kMapeEpsilon = 1e-9;

struct MapeResult {
    double value = 0.0;
    std::size_t used = 0;
    std::size_t excluded = 0;
};

// Mean of |pred - actual| / |actual|; ground truth is always the denominator.
// Throws shape_mismatch for unequal/empty input, all_entries_degenerate when
// every actual is ~0.
MapeResult mape(std::span<const double> predicted, std::span<const double> actual);

// User-count-weighted mean of per-record pointwise MAPE.
double mape_p(std::span<const PredictionRecord> records);

// User-count-weighted MAPE of cumulative LTV, prefix + horizon. When n_total is
// given every record must span exactly n_total retention days.
double mape_a(std::span<const PredictionRecord> records, std::optional<std::size_t> n_total = std::nullopt);

struct ChannelMetrics {
    ChannelId channel;
    double mape_p = 0.0;
    double mape_a = 0.0;
    double weight = 0.0; // sum of user counts
    std::size_t records = 0;
};

struct EvalReport {
    double mape_p = 0.0;
    double mape_a = 0.0;
    std::vector<ChannelMetrics> per_channel;
    std::size_t record_count = 0;
    std::size_t excluded_points = 0;
    std::string config_fingerprint;
};

EvalReport evaluate_records(std::span<const PredictionRecord> records, std::string config_fingerprint = {});

nlohmann::json to_json(const EvalReport& report);
// Overall row (channel "*") first, then one row per channel.
void write_report_csv(const EvalReport& report, std::ostream& out);

// One file per record: retention_day,actual,predicted.
void write_plot_data(std::span<const PredictionRecord> records, const std::filesystem::path& dir);

// Record for the last column of `window` given a predicted n x k matrix (original units).
PredictionRecord make_prediction_record(const TrapezoidWindow& window, const Matrix& prediction);

} // namespace ttf
