#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace acm {

enum class ErrorCode {
  structural_error,
  marker_not_found,
  cross_message_span,
  overlap_rejected,
  schema_violation,
  fragment_not_found,
  summarizer_error,
  search_id_not_found,
  unknown_tool,
  size_error,
  collect_error,
};

std::string_view error_code_name(ErrorCode code);

// Engine-level failure. Tool dispatch converts these into error ToolResults;
// they only escape as exceptions when an operation is invoked directly.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace acm
