#pragma once

#include "ttf/matrix.hpp"

#include <span>
#include <vector>

namespace ttf {

// Per-column median and IQR. A column whose IQR is (numerically) zero falls
// back to iqr = 1 so the scaling degenerates to centering only.
struct RobustScaleParams {
    std::vector<double> median;
    std::vector<double> iqr;
    std::vector<bool> fallback;

    std::size_t columns() const { return median.size(); }
};

inline constexpr double kDegenerateIqr = 1e-12;

// Linear interpolation between closest order statistics ("type 7").
// `sorted` must be non-empty and ascending.
double quantile_sorted(std::span<const double> sorted, double q);

struct ScaledColumn {
    std::vector<double> values;
    RobustScaleParams params; // one column
};

ScaledColumn robust_scale(std::span<const double> column);
std::vector<double> inverse_robust_scale(std::span<const double> scaled, const RobustScaleParams& params,
                                         std::size_t column = 0);

struct ScaledWindow {
    Matrix input;
    RobustScaleParams params;
};

// Scales each column over its valid region only (rows >= leading_zeros[j]);
// the padding prefix stays exactly zero.
ScaledWindow robust_scale_window(const Matrix& input, std::span<const int> leading_zeros);

// Applies existing per-column params to another matrix with the same column count
// (used for targets, which share the input column's statistics).
Matrix apply_robust_scale(const Matrix& values, const RobustScaleParams& params);
Matrix invert_robust_scale(const Matrix& scaled, const RobustScaleParams& params);

// Throws invalid_bounds when a > b.
int clip(int t, int a, int b);

// Centered moving average along the time axis with replicate padding:
//   S[p, j] = 1/w * sum_{r=0}^{w-1} M[clip(p + r - w/2, 0, l-1), j]
// Accumulated relative to the centre cell so constant columns are preserved exactly.
// Throws scale_too_large when scale > rows, invalid_argument when scale < 1.
Matrix moving_average(const Matrix& input, int scale);

} // namespace ttf
