#pragma once

#include <stdexcept>
#include <string>

namespace phystrack {

// Mirrors pt_status in phystrack.h; values must stay in sync.
enum class ErrorCode : int {
  InvalidArgument = 1,
  Domain = 2,
  Parse = 3,
  Io = 4,
  Numerical = 5,
  Sequence = 6,
  Evaluation = 7,
  Config = 8,
  Alignment = 9,
  Internal = 10,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace phystrack
