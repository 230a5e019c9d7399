#pragma once

#include "ttf/date.hpp"

#include <json.hpp>

#include <deque>
#include <optional>
#include <string>
#include <vector>

namespace ttf {

inline constexpr int kDriftWindowDays = 7;
// Absolute MAPE_p difference (0.02 == 2 percentage points).
inline constexpr double kDriftThreshold = 0.02;

enum class DriftDecision { ok, retrain_trigger };
std::string_view to_string(DriftDecision decision);

struct DriftPoint {
    Day date;
    double mape_p = 0.0; // fraction, 0.135 == 13.5%
};

struct DriftAlert {
    Day date;
    double mape_p = 0.0;
    double rolling_mean = 0.0;
    double baseline = 0.0;
    std::size_t window_size = 0;
    DriftDecision decision = DriftDecision::ok;
    std::string note;
};

class DriftState {
public:
    DriftState() = default;
    explicit DriftState(double baseline) : baseline_(baseline) {}

    void set_baseline(double baseline) { baseline_ = baseline; }
    const std::optional<double>& baseline() const { return baseline_; }
    const std::deque<DriftPoint>& window() const { return window_; }
    const std::vector<DriftAlert>& alerts() const { return alerts_; }

    // Pushes the point (evicting entries older than 7 days) and decides.
    // Points must arrive in strictly increasing date order.
    DriftDecision check(const DriftPoint& point);

    nlohmann::json to_json() const;
    static DriftState from_json(const nlohmann::json& j);

private:
    std::optional<double> baseline_;
    std::deque<DriftPoint> window_;
    std::vector<DriftAlert> alerts_;
};

inline DriftDecision check_drift(DriftState& state, const DriftPoint& point) { return state.check(point); }

} // namespace ttf
