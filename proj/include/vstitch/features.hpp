#pragma once

#include <memory>
#include <vector>

#include "vstitch/geometry.hpp"
#include "vstitch/image.hpp"

namespace vstitch {

inline constexpr int kDescriptorLength = 128;

struct Keypoint {
  Point2 position;       // full-resolution pixels
  double scale = 1.0;    // octave sampling step
  double orientation = 0.0;
  double response = 0.0;
  std::vector<float> descriptor;
};

// Pluggable keypoint detector + descriptor.
class FeatureDetector {
 public:
  virtual ~FeatureDetector() = default;
  virtual std::vector<Keypoint> detect(const RealImage& gray) const = 0;
};

struct CornerDetectorOptions {
  int octaves = 3;
  double harris_k = 0.04;
  // Fraction of the strongest response a corner must exceed.
  double relative_threshold = 1e-3;
  int max_keypoints = 1500;
  int border = 8;
};

// Multi-scale Harris corners with an oriented gradient-histogram descriptor
// (4x4 cells, 8 orientation bins).
class CornerDetector final : public FeatureDetector {
 public:
  CornerDetector() = default;
  explicit CornerDetector(CornerDetectorOptions options) : options_(options) {}

  std::vector<Keypoint> detect(const RealImage& gray) const override;

 private:
  CornerDetectorOptions options_;
};

std::vector<Keypoint> detect_and_describe(const ImageU8& image);
std::vector<Keypoint> detect_and_describe(const ImageU8& image,
                                          const FeatureDetector& detector);

}  // namespace vstitch
