#include "vstitch/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "vstitch/error.hpp"
#include "vstitch/features.hpp"

namespace vstitch {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Extent extent_of(const ImageU8& image) { return {image.width(), image.height()}; }

ImageU8 fit_to(const ImageU8& image, int width, int height) {
  if (image.width() == width && image.height() == height) return image;
  return resize_bilinear(image, width, height);
}

std::string fixed(double v, int digits) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(digits);
  out << v;
  return out.str();
}

}  // namespace

WeightProfile StitchConfig::weight_profile(Extent source) const {
  const double diag = std::hypot(source.width, source.height);
  return {sigma ? *sigma : sigma_fraction * diag, gamma};
}

void StitchConfig::validate() const {
  selection.validate();
  if (!(ratio > 0.0 && ratio <= 1.0)) throw Error(ErrorCode::kParameter, "ratio must lie in (0, 1]");
  if (sigma && !(*sigma > 0.0)) throw Error(ErrorCode::kParameter, "sigma must be positive");
  if (!(sigma_fraction > 0.0)) throw Error(ErrorCode::kParameter, "sigma_fraction must be positive");
  WeightProfile{1.0, gamma}.validate();
  if (cell_size < 1) throw Error(ErrorCode::kParameter, "cell_size must be at least 1");
  if (lambda && !(*lambda >= 0.0)) throw Error(ErrorCode::kParameter, "lambda must be nonnegative");
  if (!(lambda_scale >= 0.0)) throw Error(ErrorCode::kParameter, "lambda_scale must be nonnegative");
  if (pyramid_levels < 0) throw Error(ErrorCode::kParameter, "pyramid_levels must be nonnegative");
  if (realign_interval < 0) throw Error(ErrorCode::kParameter, "realign_interval must be nonnegative");
  if (input_width < 8 || input_height < 8) throw Error(ErrorCode::kParameter, "input size must be at least 8x8");
  if (!(max_canvas_area > 0.0)) throw Error(ErrorCode::kParameter, "max_canvas_area must be positive");
}

Point2 AlignmentModel::map_a_point(Point2 p) const { return warp_field_a.map(p) + canvas.offset; }

Point2 AlignmentModel::map_b_point(Point2 p) const { return warp_b.apply(p) + canvas.offset; }

AlignmentModel make_model(const WarpField& warp_a, const Homography& warp_b, Extent extent_a, Extent extent_b,
                          double max_canvas_area) {
  AlignmentModel m;
  m.warp_field_a = warp_a;
  m.warp_b = warp_b;
  const Warp wa = warp_a.cells.size() == 1 ? Warp(warp_a.cells.front()) : Warp(warp_a);
  m.canvas = compute_canvas(extent_a, wa, extent_b, warp_b, max_canvas_area);
  auto map_a = std::make_shared<WarpMap>(build_warp_map(extent_a, wa, m.canvas));
  auto map_b = std::make_shared<WarpMap>(build_warp_map(extent_b, warp_b, m.canvas));
  m.overlap = std::make_shared<OverlapRegion>(compute_overlap(map_a->mask, map_b->mask));
  m.map_a = std::move(map_a);
  m.map_b = std::move(map_b);
  return m;
}

AlignmentModel identity_model(Extent extent) {
  AlignmentModel m = make_model(WarpField::constant(Homography(), extent), Homography(), extent, extent);
  m.global = Homography();
  return m;
}

AlignmentModel align_correspondences(const CorrespondenceSet& pairs, Extent extent_a, Extent extent_b,
                                     const StitchConfig& config) {
  config.validate();
  try {
    const MatchSet matches = to_match_set(pairs);
    if (matches.size() < static_cast<std::size_t>(config.selection.s)) {
      throw Error(ErrorCode::kNoInliers, std::to_string(matches.size()) + " matches are too few to align");
    }
    const HypothesisSet hyps = generate_hypotheses(matches, config.selection, config.seed);
    const ResidualTable table = rank_hypotheses(matches, hyps);
    CorrespondenceSet inliers = select_inliers(matches, table, hyps, config.selection);
    if (inliers.size() < 4) throw Error(ErrorCode::kNoInliers, "fewer than four inliers");
    const Homography global = estimate_global_homography(inliers);

    WarpField field;
    Homography warp_b;
    if (config.mode == AlignmentMode::kGlobal) {
      field = WarpField::constant(global, extent_a);
    } else {
      WarpFieldOptions options;
      options.profile = config.weight_profile(extent_a);
      options.cell_size = config.cell_size;
      options.orientation = config.orientation;
      field = build_warp_field(extent_a, inliers, global, options);
      Point2 centroid;
      for (const Correspondence& c : inliers) centroid = centroid + c.src;
      centroid.x /= static_cast<double>(inliers.size());
      centroid.y /= static_cast<double>(inliers.size());
      const int col = field.cell_col(centroid.x);
      const int row = field.cell_row(centroid.y);
      const std::size_t idx = static_cast<std::size_t>(row) * field.cols + col;
      warp_b = compensation_transform(field.cells[idx], field.local_cells[idx]);
    }

    AlignmentModel model = make_model(field, warp_b, extent_a, extent_b, config.max_canvas_area);
    model.global = global;
    AlignmentDiagnostics& d = model.diagnostics;
    d.matches = matches.size();
    d.fallback_cells = field.fallback_cells;
    for (const Correspondence& c : inliers) {
      const double r = distance(global.apply(c.src), c.dst);
      d.inlier_residual_mean += r;
      d.inlier_residual_max = std::max(d.inlier_residual_max, r);
    }
    d.inlier_residual_mean /= static_cast<double>(inliers.size());
    d.inliers = std::move(inliers);
    return model;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kAlignmentFailed || e.code() == ErrorCode::kParameter) throw;
    throw Error(ErrorCode::kAlignmentFailed, std::string("alignment failed: ") + e.what());
  }
}

AlignmentModel align(const ImageU8& frame_a, const ImageU8& frame_b, const StitchConfig& config,
                     const CorrespondenceSet* matches) {
  if (matches) return align_correspondences(*matches, extent_of(frame_a), extent_of(frame_b), config);
  const auto ka = detect_and_describe(frame_a);
  const auto kb = detect_and_describe(frame_b);
  if (ka.empty() || kb.empty()) throw Error(ErrorCode::kAlignmentFailed, "alignment failed: no keypoints");
  const MatchSet found = match_descriptors(ka, kb, config.ratio);
  AlignmentModel model = align_correspondences(correspondences(found), extent_of(frame_a), extent_of(frame_b), config);
  model.diagnostics.keypoints_a = ka.size();
  model.diagnostics.keypoints_b = kb.size();
  return model;
}

namespace {

void sample_into(const ImageU8& image, const WarpMap& map, std::size_t i, std::uint8_t* dst) {
  const int c = image.channels();
  const double sx = map.src_x[i];
  const double sy = map.src_y[i];
  const int x0 = static_cast<int>(sx);
  const int y0 = static_cast<int>(sy);
  const int x1 = std::min(x0 + 1, image.width() - 1);
  const int y1 = std::min(y0 + 1, image.height() - 1);
  const double fx = sx - x0;
  const double fy = sy - y0;
  const std::uint8_t* r0 = image.row(y0);
  const std::uint8_t* r1 = image.row(y1);
  for (int ch = 0; ch < c; ++ch) {
    const double top = r0[x0 * c + ch] * (1.0 - fx) + r0[x1 * c + ch] * fx;
    const double bottom = r1[x0 * c + ch] * (1.0 - fx) + r1[x1 * c + ch] * fx;
    dst[ch] = to_byte(top * (1.0 - fy) + bottom * fy);
  }
}

// Single-coverage pixels are resampled straight from the frames; the overlap
// takes the blended values.
ImageU8 compose(const ImageU8& a, const ImageU8& b, const WarpMap& map_a, const WarpMap& map_b,
                const PixelRect& r, const RealImage& blended) {
  const int c = a.channels();
  ImageU8 out(map_a.width, map_a.height, c, 0);
  for (int y = 0; y < out.height(); ++y) {
    const std::uint8_t* va = map_a.mask.row(y);
    const std::uint8_t* vb = map_b.mask.row(y);
    std::uint8_t* dst = out.row(y);
    for (int x = 0; x < out.width(); ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * out.width() + x;
      std::uint8_t* d = dst + static_cast<std::size_t>(x) * c;
      if (va[x] && vb[x]) {
        const double* s = blended.row(y - r.y0) + static_cast<std::size_t>(x - r.x0) * c;
        for (int ch = 0; ch < c; ++ch) d[ch] = to_byte(s[ch]);
      } else if (va[x]) {
        sample_into(a, map_a, i, d);
      } else if (vb[x]) {
        sample_into(b, map_b, i, d);
      }
    }
  }
  return out;
}

}  // namespace

StitchResult stitch_frame(const ImageU8& frame_a, const ImageU8& frame_b, const AlignmentModel& model,
                          const FrameState& state, const StitchConfig& config) {
  if (!model.map_a || !model.map_b || !model.overlap) {
    throw Error(ErrorCode::kParameter, "alignment model has no cached warp maps");
  }
  if (frame_a.width() != model.map_a->source.width || frame_a.height() != model.map_a->source.height ||
      frame_b.width() != model.map_b->source.width || frame_b.height() != model.map_b->source.height) {
    throw Error(ErrorCode::kParameter, "frame size differs from the alignment model");
  }
  StitchResult out;
  out.state.frame_index = state.frame_index + 1;
  StageTimings& t = out.state.timing;

  const OverlapRegion& region = *model.overlap;
  const PixelRect& r = region.bounds;

  auto t0 = Clock::now();
  const WarpedImage wa = warp_image(frame_a, *model.map_a, r);
  const WarpedImage wb = warp_image(frame_b, *model.map_b, r);
  t.warp = seconds_since(t0);

  t0 = Clock::now();
  const CostField cost = compute_gradient_cost(region, to_gray(wa.pixels), to_gray(wb.pixels));
  t.cost = seconds_since(t0);

  t0 = Clock::now();
  if (state.prev_seam) {
    const double lambda = config.lambda ? *config.lambda : config.lambda_scale * default_lambda(cost, region);
    out.seam = update_seam(cost, build_penalty(*state.prev_seam, region, lambda), region, config.seam_update);
    out.seam_displacement = seam_displacement(*state.prev_seam, out.seam);
  } else {
    out.seam = find_seam(cost, region);
  }
  out.seam_cost = seam_cost(cost, out.seam);
  t.seam = seconds_since(t0);

  t0 = Clock::now();
  const WeightMask weight = seam_to_weight_mask(out.seam, r, wa.mask, wb.mask);
  const int levels = config.pyramid_levels > 0 ? config.pyramid_levels
                                                : default_pyramid_levels(model.canvas.width, model.canvas.height);
  const RealImage blended = blend_region(wa.pixels, wa.mask, wb.pixels, wb.mask, weight.w, levels);
  out.frame = compose(frame_a, frame_b, *model.map_a, *model.map_b, r, blended);
  t.blend = seconds_since(t0);

  out.state.prev_seam = out.seam;
  return out;
}

TimingSummary summarize(std::vector<double> samples) {
  if (samples.empty()) return {};
  std::ranges::sort(samples);
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(samples.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, samples.size() - 1);
    return samples[lo] + (pos - static_cast<double>(lo)) * (samples[hi] - samples[lo]);
  };
  return {std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size()),
          quantile(0.5), quantile(0.95)};
}

double RunStats::mean_seam_displacement() const {
  if (seam_displacements.size() < 2) return 0.0;
  // Frame 0 and frames right after a re-alignment have no predecessor.
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < seam_displacements.size(); ++i) {
    if (std::ranges::find(alignment_frames, i) != alignment_frames.end()) continue;
    sum += seam_displacements[i];
    ++n;
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

double RunStats::per_frame_fps() const {
  double total = 0.0;
  for (const StageTimings& t : frame_timings) total += t.total();
  return total > 0.0 ? static_cast<double>(frame_timings.size()) / total : 0.0;
}

std::string format_report(const RunStats& s, bool include_timings) {
  std::ostringstream out;
  out << "frames=" << s.frames << "\n";
  out << "frames_left=" << s.frames_a << "\n";
  out << "frames_right=" << s.frames_b << "\n";
  out << "truncated=" << (s.truncated ? 1 : 0) << "\n";
  if (s.truncated) {
    out << "warning=frame counts differ; processed " << s.frames << " pairs\n";
  }
  out << "alignments=" << s.alignments << "\n";
  out << "alignment_failures=" << s.alignment_failures << "\n";
  out << "alignment_frames=";
  for (std::size_t i = 0; i < s.alignment_frames.size(); ++i) out << (i ? "," : "") << s.alignment_frames[i];
  out << "\n";
  out << "seam_displacement_mean=" << fixed(s.mean_seam_displacement(), 6) << "\n";
  const TimingSummary cost = summarize(s.seam_costs);
  out << "seam_cost_mean=" << fixed(cost.mean, 6) << "\n";
  if (!include_timings) return out.str();

  auto stage = [&](const char* name, auto get) {
    std::vector<double> v;
    for (const StageTimings& t : s.frame_timings) v.push_back(get(t) * 1000.0);
    const TimingSummary sum = summarize(std::move(v));
    out << name << "_ms_mean=" << fixed(sum.mean, 3) << "\n";
    out << name << "_ms_p50=" << fixed(sum.p50, 3) << "\n";
    out << name << "_ms_p95=" << fixed(sum.p95, 3) << "\n";
  };
  stage("warp", [](const StageTimings& t) { return t.warp; });
  stage("cost", [](const StageTimings& t) { return t.cost; });
  stage("seam", [](const StageTimings& t) { return t.seam; });
  stage("blend", [](const StageTimings& t) { return t.blend; });
  stage("frame", [](const StageTimings& t) { return t.total(); });
  std::vector<double> align_ms;
  for (double v : s.align_seconds) align_ms.push_back(v * 1000.0);
  const TimingSummary al = summarize(std::move(align_ms));
  out << "align_ms_mean=" << fixed(al.mean, 3) << "\n";
  out << "per_frame_fps=" << fixed(s.per_frame_fps(), 3) << "\n";
  out << "wall_seconds=" << fixed(s.wall_seconds, 3) << "\n";
  out << "wall_fps=" << fixed(s.wall_seconds > 0 ? s.frames / s.wall_seconds : 0.0, 3) << "\n";
  return out.str();
}

RunStats run(const FrameStream& a, const FrameStream& b, const StitchConfig& config, const FrameSink& sink,
             const RunOptions& options) {
  config.validate();
  const auto wall0 = Clock::now();
  RunStats stats;
  stats.frames_a = a.count;
  stats.frames_b = b.count;
  stats.frames = std::min(a.count, b.count);
  stats.truncated = a.count != b.count;

  const Aligner aligner = options.aligner ? options.aligner
                                          : Aligner([&](const ImageU8& fa, const ImageU8& fb, const StitchConfig& c) {
                                              return align(fa, fb, c, options.matches);
                                            });
  std::optional<AlignmentModel> model;
  FrameState state;
  for (std::size_t i = 0; i < stats.frames; ++i) {
    const ImageU8 fa = fit_to(a.read(i), config.input_width, config.input_height);
    const ImageU8 fb = fit_to(b.read(i), config.input_width, config.input_height);
    const bool due = i == 0 || (config.realign_interval > 0 && i % static_cast<std::size_t>(config.realign_interval) == 0);
    if (due) {
      const auto t0 = Clock::now();
      try {
        AlignmentModel fresh = aligner(fa, fb, config);
        fresh.frame_estimated = i;
        model = std::move(fresh);
        state.prev_seam.reset();
        ++stats.alignments;
        stats.alignment_frames.push_back(i);
        if (options.on_alignment) options.on_alignment(*model, fa, fb);
      } catch (const Error& e) {
        ++stats.alignment_failures;
        if (!model) {
          throw Error(ErrorCode::kAlignmentFailed,
                      e.code() == ErrorCode::kAlignmentFailed ? std::string(e.what())
                                                              : std::string("alignment failed: ") + e.what());
        }
      }
      stats.align_seconds.push_back(seconds_since(t0));
    }
    StitchResult r = stitch_frame(fa, fb, *model, state, config);
    stats.seam_displacements.push_back(r.seam_displacement);
    stats.seam_costs.push_back(r.seam_cost);
    stats.frame_timings.push_back(r.state.timing);
    state = r.state;
    if (sink) sink(i, r.frame, r);
  }
  stats.wall_seconds = seconds_since(wall0);
  return stats;
}

}  // namespace vstitch
