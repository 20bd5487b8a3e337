#pragma once

#include <vector>

#include "vstitch/image.hpp"
#include "vstitch/seam.hpp"
#include "vstitch/warp.hpp"

namespace vstitch {

enum class PyramidKind { kGaussian, kLaplacian };

struct Pyramid {
  PyramidKind kind = PyramidKind::kGaussian;
  std::vector<RealImage> levels;

  int level_count() const noexcept { return static_cast<int>(levels.size()); }
};

// Weight of image A per canvas pixel; image B takes 1 - w.
struct WeightMask {
  RealImage w;
};

// A takes the pixels left of the seam in each row it spans, B the seam and
// everything right of it. Exclusive pixels go to the image that covers them.
WeightMask seam_to_weight_mask(const Seam& seam, const CanvasExtent& canvas, const Mask& mask_a,
                               const Mask& mask_b);
// Same labeling restricted to `rect`; the masks cover `rect` only and the
// seam stays in canvas coordinates.
WeightMask seam_to_weight_mask(const Seam& seam, const PixelRect& rect, const Mask& mask_a,
                               const Mask& mask_b);

// One 5-tap binomial smoothing and 2x decimation; output is ceil(dim / 2).
RealImage reduce(const RealImage& image);
// Inverse-resolution step of reduce, to an explicit output size.
RealImage expand(const RealImage& image, int width, int height);

// Throws kParameter unless 1 <= levels and min(dims) >= 2^(levels-1).
Pyramid build_gaussian_pyramid(const RealImage& image, int levels);
Pyramid build_laplacian_pyramid(const RealImage& image, int levels);
// Upsample-and-add from the coarsest level; no clamping.
RealImage collapse_pyramid(const Pyramid& laplacian);

// Per level: Gw * a + (1 - Gw) * b with Gw the Gaussian pyramid of the weight.
Pyramid blend_pyramids(const Pyramid& lap_a, const Pyramid& lap_b, const WeightMask& weight);
Pyramid blend_pyramids(const Pyramid& lap_a, const Pyramid& lap_b, const Pyramid& weight_pyramid);

// floor(log2(min dim)) - 2, clamped to [2, 6].
int default_pyramid_levels(int width, int height);
// Largest level count <= requested that the dimensions allow.
int feasible_pyramid_levels(int width, int height, int requested);

// Replaces invalid pixels with the nearest valid pixel in the same row, then
// fills rows without any valid pixel from the nearest filled row.
RealImage fill_invalid(const RealImage& image, const Mask& mask);

// Fills each image past its mask, then blends the Laplacian pyramids under
// the weight's Gaussian pyramid and collapses. The depth is capped by the
// raster size.
RealImage blend_region(const RealImage& a, const Mask& mask_a, const RealImage& b, const Mask& mask_b,
                       const RealImage& weight, int levels);

// Multi-band composite over `bounds`; pixels outside it, or covered by one
// image only, are copied from that image. levels <= 0 picks the default for
// the canvas.
ImageU8 blend_warped(const WarpedImage& a, const WarpedImage& b, const WeightMask& weight,
                     const PixelRect& bounds, int levels = 0);

}  // namespace vstitch
