#include "ttf/evaluation.hpp"

#include "ttf/error.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <ostream>

namespace ttf {

using nlohmann::json;

MapeResult mape(std::span<const double> predicted, std::span<const double> actual) {
    if (predicted.size() != actual.size() || predicted.empty())
        throw Error(ErrorCode::shape_mismatch, "mape needs equal, non-empty sequences");
    MapeResult r;
    double total = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        if (std::abs(actual[i]) < kMapeEpsilon) {
            ++r.excluded;
            continue;
        }
        total += std::abs(predicted[i] - actual[i]) / std::abs(actual[i]);
        ++r.used;
    }
    if (r.used == 0) throw Error(ErrorCode::all_entries_degenerate, "every actual value is ~0");
    r.value = total / static_cast<double>(r.used);
    return r;
}

namespace {

double record_mape_a(const PredictionRecord& r) {
    if (r.predicted.size() != r.actual.size()) throw Error(ErrorCode::shape_mismatch, "predicted/actual length differ");
    double prefix = 0.0, pred = 0.0, actual = 0.0;
    for (double v : r.observed_prefix) prefix += v;
    for (double v : r.predicted) pred += v;
    for (double v : r.actual) actual += v;
    const double truth = prefix + actual;
    if (std::abs(truth) <= kMapeEpsilon)
        throw Error(ErrorCode::degenerate_actual, "actual cumulative LTV is ~0 for " + r.channel.value + "@" +
                                                      format_date(r.activation));
    return std::abs((prefix + pred) - truth) / std::abs(truth);
}

void check_weight(const PredictionRecord& r) {
    if (r.user_count < 1) throw Error(ErrorCode::invalid_argument, "user_count must be >= 1");
}

} // namespace

double mape_p(std::span<const PredictionRecord> records) {
    if (records.empty()) throw Error(ErrorCode::empty_input, "mape_p of no records");
    double num = 0.0, den = 0.0;
    for (const auto& r : records) {
        check_weight(r);
        const double w = static_cast<double>(r.user_count);
        num += w * mape(r.predicted, r.actual).value;
        den += w;
    }
    return num / den;
}

double mape_a(std::span<const PredictionRecord> records, std::optional<std::size_t> n_total) {
    if (records.empty()) throw Error(ErrorCode::empty_input, "mape_a of no records");
    double num = 0.0, den = 0.0;
    for (const auto& r : records) {
        check_weight(r);
        if (n_total && r.observed_prefix.size() + r.predicted.size() != *n_total)
            throw Error(ErrorCode::shape_mismatch, "record spans " +
                                                       std::to_string(r.observed_prefix.size() + r.predicted.size()) +
                                                       " days, expected " + std::to_string(*n_total));
        const double w = static_cast<double>(r.user_count);
        num += w * record_mape_a(r);
        den += w;
    }
    return num / den;
}

EvalReport evaluate_records(std::span<const PredictionRecord> records, std::string config_fingerprint) {
    if (records.empty()) throw Error(ErrorCode::empty_input, "no records to evaluate");
    struct Acc {
        double p = 0.0, a = 0.0, w = 0.0;
        std::size_t n = 0;
    };
    std::map<ChannelId, Acc> acc;
    EvalReport report;
    report.config_fingerprint = std::move(config_fingerprint);
    for (const auto& r : records) {
        check_weight(r);
        const MapeResult m = mape(r.predicted, r.actual);
        const double w = static_cast<double>(r.user_count);
        Acc& a = acc[r.channel];
        a.p += w * m.value;
        a.a += w * record_mape_a(r);
        a.w += w;
        ++a.n;
        report.excluded_points += m.excluded;
    }
    double num_p = 0.0, num_a = 0.0, den = 0.0;
    for (const auto& [channel, a] : acc) {
        report.per_channel.push_back({channel, a.p / a.w, a.a / a.w, a.w, a.n});
        num_p += a.p;
        num_a += a.a;
        den += a.w;
    }
    report.mape_p = num_p / den;
    report.mape_a = num_a / den;
    report.record_count = records.size();
    return report;
}

json to_json(const EvalReport& r) {
    json channels = json::array();
    for (const auto& c : r.per_channel)
        channels.push_back({{"channel", c.channel.value},
                            {"mape_p", c.mape_p},
                            {"mape_a", c.mape_a},
                            {"weight", c.weight},
                            {"records", c.records}});
    return json{{"mape_p", r.mape_p},
                {"mape_a", r.mape_a},
                {"record_count", r.record_count},
                {"excluded_points", r.excluded_points},
                {"config_fingerprint", r.config_fingerprint},
                {"per_channel", channels}};
}

void write_report_csv(const EvalReport& r, std::ostream& out) {
    out << "channel_id,mape_p,mape_a,weight,records\n";
    double total_weight = 0.0;
    for (const auto& c : r.per_channel) total_weight += c.weight;
    out << "*," << format_real(r.mape_p) << ',' << format_real(r.mape_a) << ',' << format_real(total_weight) << ','
        << r.record_count << '\n';
    for (const auto& c : r.per_channel)
        out << c.channel.value << ',' << format_real(c.mape_p) << ',' << format_real(c.mape_a) << ','
            << format_real(c.weight) << ',' << c.records << '\n';
}

void write_plot_data(std::span<const PredictionRecord> records, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (const auto& r : records) {
        const auto path = dir / (r.channel.value + "_" + format_date(r.activation) + ".csv");
        std::ofstream out(path);
        if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
        out << "retention_day,actual,predicted\n";
        const std::size_t offset = r.observed_prefix.size();
        for (std::size_t i = 0; i < offset; ++i) out << i << ',' << format_real(r.observed_prefix[i]) << ",\n";
        for (std::size_t i = 0; i < r.predicted.size(); ++i) {
            out << offset + i << ',';
            if (i < r.actual.size()) out << format_real(r.actual[i]);
            out << ',' << format_real(r.predicted[i]) << '\n';
        }
    }
}

PredictionRecord make_prediction_record(const TrapezoidWindow& window, const Matrix& prediction) {
    const int k = window.spec.k, m = window.spec.m, n = window.spec.n;
    if (prediction.rows() != n || prediction.cols() != k)
        throw Error(ErrorCode::shape_mismatch, "prediction shape does not match window");
    PredictionRecord r;
    r.channel = window.channel;
    r.activation = window.anchor();
    r.user_count = window.user_counts.back();
    const Eigen::Index l = window.input.rows();
    for (Eigen::Index p = l - m; p < l; ++p) r.observed_prefix.push_back(window.input(p, k - 1));
    for (int h = 0; h < n; ++h) r.predicted.push_back(prediction(h, k - 1));
    if (window.has_target())
        for (int h = 0; h < n; ++h) r.actual.push_back(window.target(h, k - 1));
    return r;
}

} // namespace ttf
