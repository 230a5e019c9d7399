#include "ttf/synthdata.hpp"

#include "ttf/error.hpp"
#include "ttf/preprocess.hpp"
#include "ttf/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>

namespace ttf {

using nlohmann::json;

void GeneratorConfig::validate() const {
    auto fail = [](const std::string& what) { throw Error(ErrorCode::invalid_config, what); };
    if (channels < 1) fail("channels must be positive");
    if (!(first_date < last_date)) fail("first_date must precede last_date");
    if (!(volatility >= 0.0)) fail("volatility must be >= 0");
    if (!(holiday_boost >= 0.0)) fail("holiday_boost must be >= 0");
    if (!(drift_prob >= 0.0 && drift_prob <= 1.0)) fail("drift_prob must be in [0, 1]");
    if (!(drift_sigma >= 0.0)) fail("drift_sigma must be >= 0");
    if (!(decay_exponent_range.first > 0.0 && decay_exponent_range.first <= decay_exponent_range.second))
        fail("decay_exponent_range must be positive and ordered");
    if (!(base_range.first > 0.0 && base_range.first <= base_range.second)) fail("base_range must be positive and ordered");
    if (!(weekly_amplitude_range.first >= 0.0 && weekly_amplitude_range.first <= weekly_amplitude_range.second &&
          weekly_amplitude_range.second < 1.0))
        fail("weekly_amplitude_range must be ordered within [0, 1)");
    if (!(user_count_range.first >= 1 && user_count_range.first <= user_count_range.second))
        fail("user_count_range must be positive and ordered");
    if (curve_length < 1) fail("curve_length must be positive");
}

json to_json(const GeneratorConfig& c) {
    return json{{"channels", c.channels},
                {"first_date", format_date(c.first_date)},
                {"last_date", format_date(c.last_date)},
                {"seed", c.seed},
                {"volatility", c.volatility},
                {"holiday_boost", c.holiday_boost},
                {"drift_prob", c.drift_prob},
                {"drift_sigma", c.drift_sigma},
                {"decay_exponent_range", {c.decay_exponent_range.first, c.decay_exponent_range.second}},
                {"base_range", {c.base_range.first, c.base_range.second}},
                {"weekly_amplitude_range", {c.weekly_amplitude_range.first, c.weekly_amplitude_range.second}},
                {"user_count_range", {c.user_count_range.first, c.user_count_range.second}},
                {"curve_length", c.curve_length}};
}

GeneratorConfig generator_config_from_json(const json& j) {
    static const std::set<std::string> known{
        "channels",   "first_date",           "last_date",  "seed",        "volatility",
        "holiday_boost", "drift_prob",        "drift_sigma", "decay_exponent_range", "base_range",
        "weekly_amplitude_range", "user_count_range", "curve_length"};
    if (!j.is_object()) throw Error(ErrorCode::invalid_config, "generator config must be an object");
    for (const auto& [key, _] : j.items())
        if (!known.count(key)) throw Error(ErrorCode::invalid_config, "unknown key '" + key + "' in generator config");
    GeneratorConfig c;
    try {
        c.channels = j.value("channels", c.channels);
        if (j.contains("first_date")) c.first_date = parse_date(j.at("first_date").get<std::string>());
        if (j.contains("last_date")) c.last_date = parse_date(j.at("last_date").get<std::string>());
        c.seed = j.value("seed", c.seed);
        c.volatility = j.value("volatility", c.volatility);
        c.holiday_boost = j.value("holiday_boost", c.holiday_boost);
        c.drift_prob = j.value("drift_prob", c.drift_prob);
        c.drift_sigma = j.value("drift_sigma", c.drift_sigma);
        c.decay_exponent_range = j.value("decay_exponent_range", c.decay_exponent_range);
        c.base_range = j.value("base_range", c.base_range);
        c.weekly_amplitude_range = j.value("weekly_amplitude_range", c.weekly_amplitude_range);
        c.user_count_range = j.value("user_count_range", c.user_count_range);
        c.curve_length = j.value("curve_length", c.curve_length);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::invalid_config, std::string("bad generator config: ") + e.what());
    }
    c.validate();
    return c;
}

HolidayCalendar default_holidays(Day first, Day last) {
    static constexpr std::pair<unsigned, unsigned> fixed[] = {{1, 1},  {2, 14},  {5, 1},   {6, 18}, {10, 1},
                                                              {10, 2}, {10, 3}, {11, 11}, {12, 12}, {12, 25}};
    std::set<Day> dates;
    for (int year = to_civil(first).year; year <= to_civil(last).year; ++year) {
        for (auto [month, day] : fixed) {
            const Day d = from_civil({year, month, day});
            if (d >= first && d <= last) dates.insert(d);
        }
    }
    return HolidayCalendar(std::move(dates));
}

namespace {

ChannelParameters draw_channel_parameters(const GeneratorConfig& cfg, Rng& rng) {
    ChannelParameters p;
    p.base = rng.uniform(cfg.base_range.first, cfg.base_range.second);
    p.decay_exponent = rng.uniform(cfg.decay_exponent_range.first, cfg.decay_exponent_range.second);
    p.weekly_amplitude = rng.uniform(cfg.weekly_amplitude_range.first, cfg.weekly_amplitude_range.second);
    p.weekly_phase = rng.uniform(0.0, 7.0);
    return p;
}

int month_index(Day d) {
    const CivilDate c = to_civil(d);
    return c.year * 12 + static_cast<int>(c.month) - 1;
}

} // namespace

std::vector<ChannelParameters> channel_parameters(const GeneratorConfig& cfg) {
    cfg.validate();
    std::vector<ChannelParameters> out;
    for (int c = 0; c < cfg.channels; ++c) {
        Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(c)));
        out.push_back(draw_channel_parameters(cfg, rng));
    }
    return out;
}

LtvDataset generate(const GeneratorConfig& cfg, const HolidayCalendar& calendar) {
    cfg.validate();
    std::vector<LtvCurve> curves;
    const int first_month = month_index(cfg.first_date);
    const int last_month = month_index(cfg.last_date + (cfg.curve_length - 1));

    for (int c = 0; c < cfg.channels; ++c) {
        Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(c)));
        char name[16];
        std::snprintf(name, sizeof name, "ch%02d", c + 1);
        const ChannelId channel{name};

        const ChannelParameters params = draw_channel_parameters(cfg, rng);
        const double base = params.base;
        const double beta = params.decay_exponent;
        const double amplitude = params.weekly_amplitude;
        const double phase = params.weekly_phase;
        double weekly[7];
        for (int dow = 0; dow < 7; ++dow)
            weekly[dow] = amplitude == 0.0 ? 1.0 : 1.0 + amplitude * std::sin(2.0 * std::numbers::pi * (dow + phase) / 7.0);

        // Cumulative level per calendar month.
        std::vector<double> drift(static_cast<std::size_t>(last_month - first_month + 1), 1.0);
        double level = 1.0;
        for (std::size_t m = 0; m < drift.size(); ++m) {
            const double u = rng.uniform();
            const double z = rng.normal();
            if (u < cfg.drift_prob) level *= std::exp(cfg.drift_sigma * z);
            drift[m] = level;
        }

        for (Day t = cfg.first_date; t <= cfg.last_date; t = t + 1) {
            LtvCurve curve{channel, t, {}, rng.uniform_int(cfg.user_count_range.first, cfg.user_count_range.second)};
            curve.values.reserve(static_cast<std::size_t>(cfg.curve_length));
            for (int i = 0; i < cfg.curve_length; ++i) {
                const Day date = t + i;
                const double eps = std::exp(cfg.volatility * rng.normal());
                const double holiday = calendar.contains(date) ? 1.0 + cfg.holiday_boost : 1.0;
                const double shift = drift[static_cast<std::size_t>(month_index(date) - first_month)];
                curve.values.push_back(base * std::pow(i + 1.0, -beta) * weekly[day_of_week(date)] * holiday * shift * eps);
            }
            curves.push_back(std::move(curve));
        }
    }
    return LtvDataset(std::move(curves), calendar);
}

namespace {

struct Moments {
    double sum = 0.0, sum_sq = 0.0;
    std::size_t count = 0;
    void add(double v) {
        sum += v;
        sum_sq += v * v;
        ++count;
    }
    double mean() const { return count ? sum / static_cast<double>(count) : 0.0; }
    double cv() const {
        if (count < 2) return 0.0;
        const double mu = mean();
        const double var = std::max(0.0, (sum_sq - static_cast<double>(count) * mu * mu) / static_cast<double>(count - 1));
        return mu != 0.0 ? std::sqrt(var) / std::abs(mu) : 0.0;
    }
};

} // namespace

DatasetSummary describe(const LtvDataset& dataset) {
    DatasetSummary out;
    std::set<Day> dates;
    Moments all;
    for (const auto& [channel, curves] : dataset.by_channel()) {
        ChannelSummary cs;
        cs.channel = channel;
        cs.curves = curves.size();
        if (!curves.empty()) {
            cs.first_activation = curves.begin()->first;
            cs.last_activation = curves.rbegin()->first;
        }
        Moments m;
        std::vector<double> values;
        for (const auto& [activation, curve] : curves) {
            dates.insert(activation);
            out.max_curve_length = std::max(out.max_curve_length, curve.values.size());
            for (double v : curve.values) {
                m.add(v);
                all.add(v);
                values.push_back(v);
            }
        }
        cs.mean_value = m.mean();
        cs.coefficient_of_variation = m.cv();
        if (!values.empty()) {
            std::sort(values.begin(), values.end());
            cs.median_value = quantile_sorted(values, 0.5);
        }
        out.curve_count += curves.size();
        out.channels.push_back(std::move(cs));
    }
    out.channel_count = out.channels.size();
    out.activation_date_count = dates.size();
    out.mean_value = all.mean();
    out.coefficient_of_variation = all.cv();
    return out;
}

json to_json(const DatasetSummary& s) {
    json channels = json::array();
    for (const auto& c : s.channels) {
        channels.push_back({{"channel", c.channel.value},
                            {"curves", c.curves},
                            {"first_activation", format_date(c.first_activation)},
                            {"last_activation", format_date(c.last_activation)},
                            {"mean_value", c.mean_value},
                            {"median_value", c.median_value},
                            {"coefficient_of_variation", c.coefficient_of_variation}});
    }
    return json{{"channel_count", s.channel_count},
                {"activation_date_count", s.activation_date_count},
                {"max_curve_length", s.max_curve_length},
                {"curve_count", s.curve_count},
                {"mean_value", s.mean_value},
                {"coefficient_of_variation", s.coefficient_of_variation},
                {"channels", channels}};
}

} // namespace ttf
