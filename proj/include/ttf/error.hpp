#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ttf {

enum class ErrorCode {
    invalid_argument,
    parse_error,
    io_error,
    duplicate_observation,
    retention_gap,
    insufficient_history,
    out_of_range,
    missing_curve,
    invalid_bounds,
    scale_too_large,
    shape_mismatch,
    unknown_backbone,
    empty_dataset,
    divergence_detected,
    non_finite_input,
    invalid_config,
    all_entries_degenerate,
    empty_input,
    degenerate_actual,
    no_baseline,
    unknown_version,
    not_approved,
    hub_locked,
    internal,
};

// Stable machine-readable name, e.g. "InsufficientHistory".
std::string_view error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace ttf
