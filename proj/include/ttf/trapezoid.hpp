#pragma once

#include "ttf/ltv.hpp"
#include "ttf/matrix.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace ttf {

// m: minimum info length, n: output length, k: series per window,
// s: stride in days between adjacent activation dates.
struct WindowSpec {
    int m = 30;
    int n = 330;
    int k = 180;
    int s = 1;

    // l = m + s(k-1)
    int input_length() const { return m + s * (k - 1); }
    void validate() const;
    std::string to_string() const;

    bool operator==(const WindowSpec&) const = default;
};

// Valid (non-padding) entries in column j: m + s(k-1-j).
int info_length(const WindowSpec& spec, int j);

// Column j holds the curve activated on start_day + s*j, zero-padded at the top
// so that every column ends on calendar date start_day + l - 1.
struct TrapezoidWindow {
    ChannelId channel;
    Day start_day;
    WindowSpec spec;
    Matrix input;   // l x k
    Matrix target;  // n x k, empty when built without targets
    std::vector<std::int64_t> user_counts;

    bool has_target() const { return target.size() != 0; }
    Day activation(int j) const { return start_day + spec.s * j; }
    // Activation date of the newest (last) column, the forecast cohort.
    Day anchor() const { return activation(spec.k - 1); }
    Day input_end() const { return start_day + (spec.input_length() - 1); }
    Day target_end() const { return start_day + (spec.input_length() + spec.n - 1); }
    int leading_zeros(int j) const { return spec.s * j; }
};

TrapezoidWindow build_window(const LtvDataset& dataset, const ChannelId& channel, Day start_day,
                             const WindowSpec& spec, bool with_target);

// True when build_window would succeed for these arguments.
bool window_feasible(const LtvDataset& dataset, const ChannelId& channel, Day start_day, const WindowSpec& spec,
                     bool with_target);

struct WindowEnumeration {
    std::vector<TrapezoidWindow> windows;
    std::size_t skipped = 0;
};

// Every feasible (channel, start_day), channels in id order then start_day ascending.
// Candidate start days are the channel's activation dates.
WindowEnumeration enumerate_windows(const LtvDataset& dataset, const WindowSpec& spec, bool with_target);

struct ColumnView {
    Vector input;  // length l, exactly l - m leading zeros
    Vector target; // length n, empty without targets
};

ColumnView last_column_view(const TrapezoidWindow& window);

// Debug dump: "# channel,start_day,spec" header then l rows of k tab-separated values.
void write_window_dump(const TrapezoidWindow& window, std::ostream& out);

} // namespace ttf
