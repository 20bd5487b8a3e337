#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vstitch/blend.hpp"
#include "vstitch/geometry.hpp"
#include "vstitch/image.hpp"
#include "vstitch/matching.hpp"
#include "vstitch/seam.hpp"
#include "vstitch/warp.hpp"

namespace vstitch {

enum class AlignmentMode {
  // Warp field for A, compensation transform for B.
  kMultiHomography,
  // H_g for A, identity for B.
  kGlobal,
};

struct StitchConfig {
  SelectionParams selection;
  double ratio = 0.8;
  // Moving DLT scale; unset means sigma_fraction of the source diagonal.
  std::optional<double> sigma;
  double sigma_fraction = 0.08;
  double gamma = 0.01;
  int cell_size = 16;
  IntegrationOrientation orientation = IntegrationOrientation::kTowardInliers;
  AlignmentMode mode = AlignmentMode::kMultiHomography;
  // Seam penalty weight; unset means lambda_scale * default_lambda.
  std::optional<double> lambda;
  double lambda_scale = 1.0;
  SeamUpdateMode seam_update = SeamUpdateMode::kPerPixel;
  // 0 picks the default depth for the canvas.
  int pyramid_levels = 0;
  // Frames between re-alignments; 0 aligns once.
  int realign_interval = 0;
  int input_width = 640;
  int input_height = 480;
  std::uint64_t seed = 1;
  double max_canvas_area = kDefaultMaxCanvasArea;

  WeightProfile weight_profile(Extent source) const;
  void validate() const;
};

struct AlignmentDiagnostics {
  std::size_t keypoints_a = 0;
  std::size_t keypoints_b = 0;
  std::size_t matches = 0;
  CorrespondenceSet inliers;
  double inlier_residual_mean = 0.0;
  double inlier_residual_max = 0.0;
  std::size_t fallback_cells = 0;
};

struct AlignmentModel {
  WarpField warp_field_a;
  Homography warp_b;
  Homography global;
  CanvasExtent canvas;
  AlignmentDiagnostics diagnostics;
  std::size_t frame_estimated = 0;
  // Cached per-model products reused by every frame.
  std::shared_ptr<const WarpMap> map_a;
  std::shared_ptr<const WarpMap> map_b;
  std::shared_ptr<const OverlapRegion> overlap;

  // Canvas coordinates of A and B points.
  Point2 map_a_point(Point2 p) const;
  Point2 map_b_point(Point2 p) const;
};

// Canvas, inverse maps and overlap for the given warps. Throws kNoOverlap
// when the warped frames are disjoint.
AlignmentModel make_model(const WarpField& warp_a, const Homography& warp_b, Extent extent_a,
                          Extent extent_b, double max_canvas_area = kDefaultMaxCanvasArea);
AlignmentModel identity_model(Extent extent);

// Detection, matching, hypotheses, inlier selection, H_g, warp field, R and
// canvas. `matches` replaces detection and matching when given. Throws
// kAlignmentFailed.
AlignmentModel align(const ImageU8& frame_a, const ImageU8& frame_b, const StitchConfig& config,
                     const CorrespondenceSet* matches = nullptr);
// Same, starting from correspondences.
AlignmentModel align_correspondences(const CorrespondenceSet& pairs, Extent extent_a, Extent extent_b,
                                     const StitchConfig& config);

struct StageTimings {
  double warp = 0.0;
  double cost = 0.0;
  double seam = 0.0;
  double blend = 0.0;

  double total() const noexcept { return warp + cost + seam + blend; }
};

struct FrameState {
  std::optional<Seam> prev_seam;
  std::size_t frame_index = 0;
  StageTimings timing;
};

struct StitchResult {
  ImageU8 frame;
  FrameState state;
  Seam seam;
  double seam_cost = 0.0;
  // Horizontal distance to the previous seam; 0 without one.
  double seam_displacement = 0.0;
};

StitchResult stitch_frame(const ImageU8& frame_a, const ImageU8& frame_b, const AlignmentModel& model,
                          const FrameState& state, const StitchConfig& config);

struct TimingSummary {
  double mean = 0.0;
  double p50 = 0.0;
  double p95 = 0.0;
};

TimingSummary summarize(std::vector<double> samples);

struct RunStats {
  std::size_t frames = 0;
  std::size_t frames_a = 0;
  std::size_t frames_b = 0;
  bool truncated = false;
  std::size_t alignments = 0;
  std::size_t alignment_failures = 0;
  std::vector<std::size_t> alignment_frames;
  std::vector<double> seam_displacements;
  std::vector<double> seam_costs;
  std::vector<double> align_seconds;
  std::vector<StageTimings> frame_timings;
  double wall_seconds = 0.0;

  double mean_seam_displacement() const;
  // Frames per second over the per-frame path (warp, cost, seam, blend).
  double per_frame_fps() const;
};

// Flat key=value text. Timings are omitted unless requested so the report
// is reproducible byte for byte.
std::string format_report(const RunStats& stats, bool include_timings);

struct FrameStream {
  std::size_t count = 0;
  std::function<ImageU8(std::size_t)> read;
};

using FrameSink = std::function<void(std::size_t, const ImageU8&, const StitchResult&)>;
using Aligner = std::function<AlignmentModel(const ImageU8&, const ImageU8&, const StitchConfig&)>;
// Called once per (re-)alignment with the model and the frame it came from.
using AlignmentObserver = std::function<void(const AlignmentModel&, const ImageU8&, const ImageU8&)>;

struct RunOptions {
  // Defaults to align() with `matches` when empty.
  Aligner aligner;
  const CorrespondenceSet* matches = nullptr;
  AlignmentObserver on_alignment;
};

// Frames are resized to the configured input size. The first alignment
// failing throws kAlignmentFailed; later failures keep the last model.
RunStats run(const FrameStream& a, const FrameStream& b, const StitchConfig& config, const FrameSink& sink,
             const RunOptions& options = {});

}  // namespace vstitch
