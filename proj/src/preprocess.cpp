#include "ttf/preprocess.hpp"

#include "ttf/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ttf {

double quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw Error(ErrorCode::invalid_argument, "quantile of empty sequence");
    const double h = static_cast<double>(sorted.size() - 1) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

namespace {

void push_column_params(std::vector<double> sorted, RobustScaleParams& params) {
    std::sort(sorted.begin(), sorted.end());
    const double median = quantile_sorted(sorted, 0.5);
    const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
    const bool degenerate = !(iqr > kDegenerateIqr);
    params.median.push_back(median);
    params.iqr.push_back(degenerate ? 1.0 : iqr);
    params.fallback.push_back(degenerate);
}

} // namespace

ScaledColumn robust_scale(std::span<const double> column) {
    if (column.empty()) throw Error(ErrorCode::invalid_argument, "robust_scale of empty column");
    ScaledColumn out;
    push_column_params({column.begin(), column.end()}, out.params);
    const double median = out.params.median[0], iqr = out.params.iqr[0];
    out.values.reserve(column.size());
    for (double x : column) out.values.push_back((x - median) / iqr);
    return out;
}

std::vector<double> inverse_robust_scale(std::span<const double> scaled, const RobustScaleParams& params,
                                         std::size_t column) {
    if (column >= params.columns()) throw Error(ErrorCode::out_of_range, "no scale params for column");
    std::vector<double> out;
    out.reserve(scaled.size());
    for (double z : scaled) out.push_back(z * params.iqr[column] + params.median[column]);
    return out;
}

ScaledWindow robust_scale_window(const Matrix& input, std::span<const int> leading_zeros) {
    if (static_cast<Eigen::Index>(leading_zeros.size()) != input.cols())
        throw Error(ErrorCode::shape_mismatch, "leading_zeros size does not match column count");
    ScaledWindow out;
    out.input = Matrix::Zero(input.rows(), input.cols());
    for (Eigen::Index j = 0; j < input.cols(); ++j) {
        const Eigen::Index first = leading_zeros[static_cast<std::size_t>(j)];
        if (first < 0 || first >= input.rows())
            throw Error(ErrorCode::shape_mismatch, "column has no valid region");
        std::vector<double> valid(static_cast<std::size_t>(input.rows() - first));
        for (Eigen::Index p = first; p < input.rows(); ++p) valid[static_cast<std::size_t>(p - first)] = input(p, j);
        push_column_params(std::move(valid), out.params);
        const double median = out.params.median.back(), iqr = out.params.iqr.back();
        for (Eigen::Index p = first; p < input.rows(); ++p) out.input(p, j) = (input(p, j) - median) / iqr;
    }
    return out;
}

Matrix apply_robust_scale(const Matrix& values, const RobustScaleParams& params) {
    if (static_cast<std::size_t>(values.cols()) != params.columns())
        throw Error(ErrorCode::shape_mismatch, "scale params do not match column count");
    Matrix out(values.rows(), values.cols());
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
        const auto c = static_cast<std::size_t>(j);
        out.col(j) = (values.col(j).array() - params.median[c]) / params.iqr[c];
    }
    return out;
}

Matrix invert_robust_scale(const Matrix& scaled, const RobustScaleParams& params) {
    if (static_cast<std::size_t>(scaled.cols()) != params.columns())
        throw Error(ErrorCode::shape_mismatch, "scale params do not match column count");
    Matrix out(scaled.rows(), scaled.cols());
    for (Eigen::Index j = 0; j < scaled.cols(); ++j) {
        const auto c = static_cast<std::size_t>(j);
        out.col(j) = scaled.col(j).array() * params.iqr[c] + params.median[c];
    }
    return out;
}

int clip(int t, int a, int b) {
    if (a > b) throw Error(ErrorCode::invalid_bounds, "clip bounds a=" + std::to_string(a) + " > b=" + std::to_string(b));
    if (t < a) return a;
    if (t > b) return b;
    return t;
}

Matrix moving_average(const Matrix& input, int scale) {
    if (scale < 1) throw Error(ErrorCode::invalid_argument, "moving average scale must be >= 1");
    const auto rows = static_cast<int>(input.rows());
    if (scale > rows)
        throw Error(ErrorCode::scale_too_large,
                    "scale " + std::to_string(scale) + " exceeds series length " + std::to_string(rows));
    if (scale == 1) return input;
    const int half = scale / 2;
    Matrix out(input.rows(), input.cols());
    for (Eigen::Index j = 0; j < input.cols(); ++j) {
        for (int p = 0; p < rows; ++p) {
            const double centre = input(p, j);
            double acc = 0.0;
            for (int r = 0; r < scale; ++r) acc += input(clip(p + r - half, 0, rows - 1), j) - centre;
            out(p, j) = centre + acc / scale;
        }
    }
    return out;
}

} // namespace ttf
