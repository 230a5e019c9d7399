#pragma once

#include "ttf/ltv.hpp"
#include "ttf/matrix.hpp"
#include "ttf/trapezoid.hpp"

#include <string>
#include <vector>

namespace ttf {

// sin/cos pairs for day-of-week, day-of-month, month-of-year, day-of-year,
// then a holiday flag.
inline constexpr int kDynamicFeatureCount = 9;

struct CovariateBundle {
    Vector static_cov;  // C_sta
    Matrix dyn_past;    // l x C_dyn
    Matrix dyn_future;  // n x C_dyn
};

CovariateBundle empty_covariates(const WindowSpec& spec);

// Writes the kDynamicFeatureCount features of `day` into `row`.
void time_features(Day day, const HolidayCalendar& calendar, Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> row);

class CovariateBuilder {
public:
    // An empty `channels` list disables static covariates; `dynamic` toggles
    // the calendar features.
    CovariateBuilder(std::vector<std::string> channels, HolidayCalendar calendar, bool dynamic);

    int static_width() const { return static_cast<int>(channels_.size()); }
    int dynamic_width() const { return dynamic_ ? kDynamicFeatureCount : 0; }

    // Unknown channels get an all-zero one-hot row.
    CovariateBundle build(const TrapezoidWindow& window) const;

private:
    std::vector<std::string> channels_;
    HolidayCalendar calendar_;
    bool dynamic_;
};

} // namespace ttf
