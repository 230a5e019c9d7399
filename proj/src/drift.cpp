#include "ttf/drift.hpp"

#include "ttf/error.hpp"

namespace ttf {

using nlohmann::json;

std::string_view to_string(DriftDecision decision) {
    return decision == DriftDecision::ok ? "ok" : "retrain_trigger";
}

DriftDecision DriftState::check(const DriftPoint& point) {
    if (!baseline_) throw Error(ErrorCode::no_baseline, "drift baseline is not set");
    if (!window_.empty() && point.date <= window_.back().date)
        throw Error(ErrorCode::invalid_argument, "drift points must have increasing dates");
    window_.push_back(point);
    while (window_.front().date <= point.date - kDriftWindowDays) window_.pop_front();
    while (window_.size() > static_cast<std::size_t>(kDriftWindowDays)) window_.pop_front();

    double sum = 0.0;
    for (const auto& p : window_) sum += p.mape_p;
    DriftAlert alert;
    alert.date = point.date;
    alert.mape_p = point.mape_p;
    alert.rolling_mean = sum / static_cast<double>(window_.size());
    alert.baseline = *baseline_;
    alert.window_size = window_.size();
    if (window_.size() < static_cast<std::size_t>(kDriftWindowDays)) {
        alert.note = "insufficient window";
    } else if (alert.rolling_mean - *baseline_ > kDriftThreshold) {
        alert.decision = DriftDecision::retrain_trigger;
    }
    alerts_.push_back(alert);
    return alert.decision;
}

json DriftState::to_json() const {
    json window = json::array();
    for (const auto& p : window_) window.push_back({{"date", format_date(p.date)}, {"mape_p", p.mape_p}});
    json alerts = json::array();
    for (const auto& a : alerts_)
        alerts.push_back({{"date", format_date(a.date)},
                          {"mape_p", a.mape_p},
                          {"rolling_mean", a.rolling_mean},
                          {"baseline", a.baseline},
                          {"window_size", a.window_size},
                          {"decision", to_string(a.decision)},
                          {"note", a.note}});
    return json{{"baseline", baseline_ ? json(*baseline_) : json(nullptr)}, {"window", window}, {"alerts", alerts}};
}

DriftState DriftState::from_json(const json& j) {
    try {
        DriftState s;
        if (!j.at("baseline").is_null()) s.baseline_ = j.at("baseline").get<double>();
        for (const auto& p : j.at("window"))
            s.window_.push_back({parse_date(p.at("date").get<std::string>()), p.at("mape_p").get<double>()});
        for (const auto& a : j.at("alerts")) {
            DriftAlert alert;
            alert.date = parse_date(a.at("date").get<std::string>());
            alert.mape_p = a.at("mape_p").get<double>();
            alert.rolling_mean = a.at("rolling_mean").get<double>();
            alert.baseline = a.at("baseline").get<double>();
            alert.window_size = a.at("window_size").get<std::size_t>();
            alert.decision = a.at("decision").get<std::string>() == "ok" ? DriftDecision::ok
                                                                        : DriftDecision::retrain_trigger;
            alert.note = a.at("note").get<std::string>();
            s.alerts_.push_back(alert);
        }
        return s;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::parse_error, std::string("drift state: ") + e.what());
    }
}

} // namespace ttf
