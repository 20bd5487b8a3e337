#pragma once

#include <stdexcept>
#include <string>

namespace vstitch {

enum class ErrorCode {
  kInsufficientData,
  kEstimationDegenerate,
  kDegenerateAxis,
  kDegenerateBlend,
  kCanvasOverflow,
  kParameter,
  kNoInliers,
  kNoOverlap,
  kNoPath,
  kAlignmentFailed,
  kIo,
  kParse,
};

const char* to_string(ErrorCode code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace vstitch
