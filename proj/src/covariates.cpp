#include "ttf/covariates.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ttf {

CovariateBundle empty_covariates(const WindowSpec& spec) {
    return {Vector(0), Matrix(spec.input_length(), 0), Matrix(spec.n, 0)};
}

void time_features(Day day, const HolidayCalendar& calendar, Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> row) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    const CivilDate civil = to_civil(day);
    const bool leap = days_in_month(from_civil({civil.year, 2, 1})) == 29;
    const double angles[4] = {
        two_pi * day_of_week(day) / 7.0,
        two_pi * (civil.day - 1) / static_cast<double>(days_in_month(day)),
        two_pi * (civil.month - 1) / 12.0,
        two_pi * (day_of_year(day) - 1) / (leap ? 366.0 : 365.0),
    };
    for (int f = 0; f < 4; ++f) {
        row(2 * f) = std::sin(angles[f]);
        row(2 * f + 1) = std::cos(angles[f]);
    }
    row(8) = calendar.contains(day) ? 1.0 : 0.0;
}

CovariateBuilder::CovariateBuilder(std::vector<std::string> channels, HolidayCalendar calendar, bool dynamic)
    : channels_(std::move(channels)), calendar_(std::move(calendar)), dynamic_(dynamic) {}

CovariateBundle CovariateBuilder::build(const TrapezoidWindow& window) const {
    const int l = window.spec.input_length();
    const int n = window.spec.n;
    CovariateBundle cov{Vector::Zero(static_width()), Matrix(l, dynamic_width()), Matrix(n, dynamic_width())};
    if (auto it = std::find(channels_.begin(), channels_.end(), window.channel.value); it != channels_.end())
        cov.static_cov(it - channels_.begin()) = 1.0;
    if (dynamic_) {
        for (int p = 0; p < l; ++p) time_features(window.start_day + p, calendar_, cov.dyn_past.row(p));
        for (int h = 0; h < n; ++h) time_features(window.start_day + (l + h), calendar_, cov.dyn_future.row(h));
    }
    return cov;
}

} // namespace ttf
