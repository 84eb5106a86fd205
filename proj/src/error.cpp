#include "cogload/error.hpp"

namespace cogload {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::singular_extinction: return "SingularExtinction";
    case ErrorCode::length_mismatch: return "LengthMismatch";
    case ErrorCode::empty_matrix: return "EmptyMatrix";
    case ErrorCode::dimension_mismatch: return "DimensionMismatch";
    case ErrorCode::empty_series: return "EmptySeries";
    case ErrorCode::rate_incompatible: return "RateIncompatible";
    case ErrorCode::no_overlap: return "NoOverlap";
    case ErrorCode::window_too_long: return "WindowTooLong";
    case ErrorCode::degenerate_groups: return "DegenerateGroups";
    case ErrorCode::k_out_of_range: return "KOutOfRange";
    case ErrorCode::shape_mismatch: return "ShapeMismatch";
    case ErrorCode::invalid_class: return "InvalidClass";
    case ErrorCode::empty_dataset: return "EmptyDataset";
    case ErrorCode::missing_class: return "MissingClass";
    case ErrorCode::undefined_auc: return "UndefinedAuc";
    case ErrorCode::invalid_level: return "InvalidLevel";
    case ErrorCode::config_invalid: return "ConfigInvalid";
    case ErrorCode::io_error: return "IoError";
    case ErrorCode::parse_error: return "ParseError";
    case ErrorCode::split_mismatch: return "SplitMismatch";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace cogload
