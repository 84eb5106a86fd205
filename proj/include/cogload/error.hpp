#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cogload {

enum class ErrorCode {
  singular_extinction,
  length_mismatch,
  empty_matrix,
  dimension_mismatch,
  empty_series,
  rate_incompatible,
  no_overlap,
  window_too_long,
  degenerate_groups,
  k_out_of_range,
  shape_mismatch,
  invalid_class,
  empty_dataset,
  missing_class,
  undefined_auc,
  invalid_level,
  config_invalid,
  io_error,
  parse_error,
  split_mismatch,
};

std::string_view to_string(ErrorCode code);

// All library failures are reported through this type; `code()` identifies
// the contract that was violated.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace cogload
