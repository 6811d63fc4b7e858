#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qgbec {

/// Machine-readable failure classes. The CLI maps each onto its own exit code.
enum class ErrorCode {
  parse_failure = 2,
  validation_failure = 3,
  degenerate_ground_state = 4,
  dimension_cap = 5,
  oracle_disagreement = 6,
  numerical_failure = 7,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::parse_failure: return "PARSE_FAILURE";
    case ErrorCode::validation_failure: return "VALIDATION_FAILURE";
    case ErrorCode::degenerate_ground_state: return "DEGENERATE_GROUND_STATE";
    case ErrorCode::dimension_cap: return "DIMENSION_CAP";
    case ErrorCode::oracle_disagreement: return "ORACLE_DISAGREEMENT";
    case ErrorCode::numerical_failure: return "NUMERICAL_FAILURE";
  }
  return "UNKNOWN";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace qgbec
