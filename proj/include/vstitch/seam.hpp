#pragma once

#include <cstdint>
#include <vector>

#include "vstitch/image.hpp"
#include "vstitch/warp.hpp"

namespace vstitch {

struct Pixel {
  int x = 0;
  int y = 0;

  friend bool operator==(const Pixel&, const Pixel&) = default;
};

// Canvas-sized intersection mask with the seam endpoints A (top) and B
// (bottom).
struct OverlapRegion {
  Mask mask;
  PixelRect bounds;
  Pixel top_anchor;
  Pixel bottom_anchor;

  bool on_mask(int x, int y) const noexcept {
    return bounds.contains(x, y) && mask.at(x, y) != 0;
  }
};

// Throws kNoOverlap when the masks are disjoint.
OverlapRegion compute_overlap(const Mask& mask_a, const Mask& mask_b);
OverlapRegion compute_overlap(const WarpedImage& a, const WarpedImage& b);

// Rasters cover region.bounds; off-mask pixels of e hold +infinity.
struct CostField {
  PixelRect bounds;
  RealImage e;
  RealImage smoothness;  // S_m
  RealImage similarity;  // S_d

  double at(int x, int y) const { return e.at(x - bounds.x0, y - bounds.y0); }
};

// e = S_m + S_d from gradients of the sum and difference of the two
// single-channel images, given either on the canvas or cropped to
// region.bounds.
CostField compute_gradient_cost(const OverlapRegion& region, const RealImage& source,
                                const RealImage& target);

enum class SeamStep : std::uint8_t { kNone, kStart, kUp, kUpLeft, kUpRight, kLeft, kRight };

struct CumulativeField {
  PixelRect bounds;
  RealImage cost;
  Raster<SeamStep> steps;

  double at(int x, int y) const { return cost.at(x - bounds.x0, y - bounds.y0); }
  SeamStep step(int x, int y) const { return steps.at(x - bounds.x0, y - bounds.y0); }
};

// Five-direction recurrence C = e + min(up-left, up, up-right, left, right),
// seeded at the top anchor: a row sweep followed by left-to-right and
// right-to-left relaxation.
CumulativeField accumulate_cost(const CostField& cost, const OverlapRegion& region);

struct Seam {
  std::vector<Pixel> path;  // A to B

  friend bool operator==(const Seam&, const Seam&) = default;
};

// Throws kNoPath when B is unreachable from A on the mask.
Seam find_seam(const CostField& cost, const OverlapRegion& region);

struct PenaltyField {
  PixelRect bounds;
  RealImage d;
  double lambda = 0.0;

  double at(int x, int y) const { return d.at(x - bounds.x0, y - bounds.y0); }
};

// lambda * horizontal distance to the previous seam, per mask pixel.
PenaltyField build_penalty(const Seam& previous, const OverlapRegion& region, double lambda);

enum class SeamUpdateMode {
  // D added to the per-pixel cost before accumulation.
  kPerPixel,
  // D added to the accumulated cost C, and the DP rerun over C + D.
  kCumulative,
};

Seam update_seam(const CostField& cost, const PenaltyField& penalty, const OverlapRegion& region,
                 SeamUpdateMode mode = SeamUpdateMode::kPerPixel);

// mean(e over mask) / overlap width.
double default_lambda(const CostField& cost, const OverlapRegion& region);

double seam_cost(const CostField& cost, const Seam& seam);

// Summed horizontal distance from the pixels of `current` to `previous`.
// Equals the penalty a unit lambda charges the current seam.
double seam_displacement(const Seam& previous, const Seam& current);

// Connectivity through the five allowed steps, single visits, on-mask.
bool is_valid_seam(const Seam& seam, const OverlapRegion& region);

}  // namespace vstitch
