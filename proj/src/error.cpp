#include "ttf/error.hpp"

namespace ttf {

std::string_view error_code_name(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::parse_error: return "ParseError";
    case ErrorCode::io_error: return "IoError";
    case ErrorCode::duplicate_observation: return "DuplicateObservation";
    case ErrorCode::retention_gap: return "RetentionGap";
    case ErrorCode::insufficient_history: return "InsufficientHistory";
    case ErrorCode::out_of_range: return "OutOfRange";
    case ErrorCode::missing_curve: return "MissingCurve";
    case ErrorCode::invalid_bounds: return "InvalidBounds";
    case ErrorCode::scale_too_large: return "ScaleTooLarge";
    case ErrorCode::shape_mismatch: return "ShapeMismatch";
    case ErrorCode::unknown_backbone: return "UnknownBackbone";
    case ErrorCode::empty_dataset: return "EmptyDataset";
    case ErrorCode::divergence_detected: return "DivergenceDetected";
    case ErrorCode::non_finite_input: return "NonFiniteInput";
    case ErrorCode::invalid_config: return "InvalidConfig";
    case ErrorCode::all_entries_degenerate: return "AllEntriesDegenerate";
    case ErrorCode::empty_input: return "EmptyInput";
    case ErrorCode::degenerate_actual: return "DegenerateActual";
    case ErrorCode::no_baseline: return "NoBaseline";
    case ErrorCode::unknown_version: return "UnknownVersion";
    case ErrorCode::not_approved: return "NotApproved";
    case ErrorCode::hub_locked: return "HubLocked";
    case ErrorCode::internal: return "Internal";
    }
    return "Internal";
}

} // namespace ttf
