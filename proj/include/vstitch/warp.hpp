#pragma once

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "vstitch/geometry.hpp"
#include "vstitch/image.hpp"

namespace vstitch {

struct Extent {
  int width = 0;
  int height = 0;

  friend bool operator==(const Extent&, const Extent&) = default;
};

// Which end of the rotated u-axis receives weight 1 (local homography).
enum class IntegrationOrientation {
  // Flip the axis when needed so w grows toward the inlier centroid.
  kTowardInliers,
  // w = (u - u_min) / (u_max - u_min) on the rotated axis without flipping.
  kAsWritten,
};

// Per-cell integrated homographies covering the source image.
struct WarpField {
  int cols = 0;
  int rows = 0;
  int cell_size = 0;
  Extent source;
  double rotation_theta = 0.0;
  // +1 or -1; u = axis_sign * (x cos(theta) + y sin(theta)) on warped coords.
  double axis_sign = 1.0;
  double u_min = 0.0;
  double u_max = 1.0;
  std::vector<Homography> cells;        // integrated H, row-major
  std::vector<Homography> local_cells;  // Moving DLT H_l, row-major
  std::vector<double> weights;          // integration weight per cell
  std::size_t fallback_cells = 0;       // cells whose local solve failed

  const Homography& cell(int col, int row) const {
    return cells[static_cast<std::size_t>(row) * cols + col];
  }
  int cell_col(double x) const;
  int cell_row(double y) const;
  // Homography of the cell owning source point p.
  const Homography& at(Point2 p) const;
  Point2 map(Point2 p) const { return at(p).apply(p); }
  // Inclusive source rectangle of a cell.
  void cell_bounds(int col, int row, double& x0, double& y0, double& x1,
                   double& y1) const;

  // Single-cell field equal to h.
  static WarpField constant(const Homography& h, Extent source);
};

struct WarpFieldOptions {
  WeightProfile profile;
  int cell_size = 16;
  IntegrationOrientation orientation = IntegrationOrientation::kTowardInliers;
};

// One Moving DLT solve per cell center, integrated with the global homography
// along the rotated u-axis.
WarpField build_warp_field(Extent extent, std::span<const Correspondence> inliers,
                           const Homography& global, const WarpFieldOptions& options);

struct CanvasExtent {
  Point2 offset;
  int width = 0;
  int height = 0;
};

inline constexpr double kDefaultMaxCanvasArea = 25e6;

using Warp = std::variant<WarpField, Homography>;

// Bounding box of both warped extents, shifted so every coordinate is
// non-negative. Throws kCanvasOverflow above max_area pixels.
CanvasExtent compute_canvas(Extent extent_a, const Warp& warp_a, Extent extent_b,
                            const Warp& warp_b,
                            double max_area = kDefaultMaxCanvasArea);

// Inverse mapping from canvas pixels to source coordinates.
struct WarpMap {
  int width = 0;
  int height = 0;
  Extent source;
  std::vector<double> src_x;
  std::vector<double> src_y;
  Mask mask;
};

WarpMap build_warp_map(Extent source, const Warp& warp, const CanvasExtent& canvas);

struct WarpedImage {
  RealImage pixels;
  Mask mask;
};

WarpedImage warp_image(const RealImage& image, const WarpMap& map);
// Warps only the canvas pixels inside `rect`; the result covers `rect`.
WarpedImage warp_image(const ImageU8& image, const WarpMap& map, const PixelRect& rect);
WarpedImage warp_image(const RealImage& image, const Warp& warp,
                       const CanvasExtent& canvas);

}  // namespace vstitch
