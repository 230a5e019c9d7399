#include "ttf/trapezoid.hpp"

#include "ttf/error.hpp"

#include <ostream>

namespace ttf {

void WindowSpec::validate() const {
    if (m < 1 || n < 1 || k < 1 || s < 1)
        throw Error(ErrorCode::invalid_config, "window spec requires m, n, k, s >= 1, got " + to_string());
}

std::string WindowSpec::to_string() const {
    return "m=" + std::to_string(m) + ";n=" + std::to_string(n) + ";k=" + std::to_string(k) +
           ";s=" + std::to_string(s);
}

int info_length(const WindowSpec& spec, int j) {
    if (j < 0 || j >= spec.k)
        throw Error(ErrorCode::out_of_range, "column " + std::to_string(j) + " outside [0, " + std::to_string(spec.k) + ")");
    return spec.m + spec.s * (spec.k - 1 - j);
}

namespace {

// Empty string when feasible, otherwise the reason.
std::string check_window(const LtvDataset& dataset, const ChannelId& channel, Day start_day, const WindowSpec& spec,
                         bool with_target, ErrorCode& code) {
    for (int j = 0; j < spec.k; ++j) {
        const Day activation = start_day + spec.s * j;
        const LtvCurve* curve = dataset.find(channel, activation);
        if (curve == nullptr) {
            code = ErrorCode::missing_curve;
            return "no curve for " + channel.value + " activated " + format_date(activation);
        }
        const std::size_t needed = static_cast<std::size_t>(info_length(spec, j) + (with_target ? spec.n : 0));
        if (curve->values.size() < needed) {
            code = ErrorCode::insufficient_history;
            return "curve " + channel.value + "@" + format_date(activation) + " has " +
                   std::to_string(curve->values.size()) + " values, window needs " + std::to_string(needed);
        }
    }
    return {};
}

} // namespace

bool window_feasible(const LtvDataset& dataset, const ChannelId& channel, Day start_day, const WindowSpec& spec,
                     bool with_target) {
    ErrorCode code{};
    return check_window(dataset, channel, start_day, spec, with_target, code).empty();
}

TrapezoidWindow build_window(const LtvDataset& dataset, const ChannelId& channel, Day start_day,
                             const WindowSpec& spec, bool with_target) {
    spec.validate();
    ErrorCode code{};
    if (auto reason = check_window(dataset, channel, start_day, spec, with_target, code); !reason.empty())
        throw Error(code, reason);

    const int l = spec.input_length();
    TrapezoidWindow w;
    w.channel = channel;
    w.start_day = start_day;
    w.spec = spec;
    w.input = Matrix::Zero(l, spec.k);
    if (with_target) w.target.resize(spec.n, spec.k);
    w.user_counts.reserve(static_cast<std::size_t>(spec.k));

    for (int j = 0; j < spec.k; ++j) {
        const LtvCurve& curve = *dataset.find(channel, start_day + spec.s * j);
        const int offset = spec.s * j;
        // Window row p holds retention day p - s*j of column j's cohort.
        for (int p = offset; p < l; ++p) w.input(p, j) = curve.values[static_cast<std::size_t>(p - offset)];
        if (with_target) {
            for (int h = 0; h < spec.n; ++h) w.target(h, j) = curve.values[static_cast<std::size_t>(l - offset + h)];
        }
        w.user_counts.push_back(curve.user_count);
    }
    return w;
}

WindowEnumeration enumerate_windows(const LtvDataset& dataset, const WindowSpec& spec, bool with_target) {
    spec.validate();
    WindowEnumeration out;
    for (const auto& [channel, curves] : dataset.by_channel()) {
        for (const auto& [activation, _] : curves) {
            if (window_feasible(dataset, channel, activation, spec, with_target))
                out.windows.push_back(build_window(dataset, channel, activation, spec, with_target));
            else
                ++out.skipped;
        }
    }
    return out;
}

ColumnView last_column_view(const TrapezoidWindow& window) {
    ColumnView view;
    view.input = window.input.col(window.spec.k - 1);
    if (window.has_target()) view.target = window.target.col(window.spec.k - 1);
    return view;
}

void write_window_dump(const TrapezoidWindow& window, std::ostream& out) {
    out << "# " << window.channel.value << ',' << format_date(window.start_day) << ',' << window.spec.to_string()
        << '\n';
    for (Eigen::Index p = 0; p < window.input.rows(); ++p) {
        for (Eigen::Index j = 0; j < window.input.cols(); ++j) {
            if (j) out << '\t';
            out << format_real(window.input(p, j));
        }
        out << '\n';
    }
}

} // namespace ttf
