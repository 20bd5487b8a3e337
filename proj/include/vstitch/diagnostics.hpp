#pragma once

#include "vstitch/geometry.hpp"
#include "vstitch/image.hpp"
#include "vstitch/seam.hpp"

namespace vstitch {

// The stitched frame with seam pixels painted red and the overlap outline
// in yellow.
ImageU8 seam_overlay(const ImageU8& frame, const Seam& seam, const OverlapRegion& region);

// A and B side by side, inlier pairs joined by green lines.
ImageU8 inlier_overlay(const ImageU8& frame_a, const ImageU8& frame_b, const CorrespondenceSet& inliers);

}  // namespace vstitch
