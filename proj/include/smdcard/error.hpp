#pragma once

#include <stdexcept>
#include <string>

namespace smdcard {

// Stable error codes. The CLI prints them as `E<code>: <message>`.
enum class ErrorCode : int {
  kConfig = 100,
  kUnknownMetric = 101,
  kThresholds = 102,
  kUnknownKey = 103,
  kMissingBounds = 110,
  kParse = 200,
  kDimensionMismatch = 201,
  kNonFinite = 202,
  kMissingReference = 203,
  kEmptySubgroup = 204,
  kMissingInput = 205,
  kInvalidArgument = 206,
  kManifest = 300,
  kReportChanged = 301,
  kRecipe = 400,
  kInternal = 500,
};

// Errors that describe bad user input (configs, files, arguments). Anything
// else thrown out of the library is treated as an internal failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string format_error_line(ErrorCode code, const std::string& message) {
  return "E" + std::to_string(static_cast<int>(code)) + ": " + message;
}

}  // namespace smdcard
