#include "vstitch/error.hpp"

namespace vstitch {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInsufficientData: return "insufficient-data";
    case ErrorCode::kEstimationDegenerate: return "estimation-degenerate";
    case ErrorCode::kDegenerateAxis: return "degenerate-axis";
    case ErrorCode::kDegenerateBlend: return "degenerate-blend";
    case ErrorCode::kCanvasOverflow: return "canvas-overflow";
    case ErrorCode::kParameter: return "parameter";
    case ErrorCode::kNoInliers: return "no-inliers";
    case ErrorCode::kNoOverlap: return "no-overlap";
    case ErrorCode::kNoPath: return "no-path";
    case ErrorCode::kAlignmentFailed: return "alignment-failed";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kParse: return "parse";
  }
  return "unknown";
}

}  // namespace vstitch
