#include <doctest.h>

#include <cmath>
#include <string>

#include "test_support.hpp"
#include "vstitch/error.hpp"
#include "vstitch/pipeline.hpp"
#include "vstitch/synth.hpp"

using namespace vstitch;

namespace {

double truth_rmse(const AlignmentModel& m, const CorrespondenceSet& truth) {
  double s = 0.0;
  for (const Correspondence& c : truth) {
    const double d = distance(m.map_a_point(c.src), m.map_b_point(c.dst));
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(truth.size()));
}

StitchConfig small_config(int w, int h) {
  StitchConfig c;
  c.input_width = w;
  c.input_height = h;
  return c;
}

FrameStream constant_stream(const ImageU8& frame, std::size_t n) {
  return {n, [frame](std::size_t) { return frame; }};
}

ImageU8 textured(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return testing::BlockTexture::random(rng, 60, w, h).render(w, h);
}

// Counts calls and returns a model that shifts B by `shift` pixels.
struct CountingAligner {
  int* calls;
  double shift = 0.0;
  int fail_on_call = -1;

  AlignmentModel operator()(const ImageU8& a, const ImageU8& b, const StitchConfig&) const {
    ++*calls;
    if (*calls == fail_on_call) throw Error(ErrorCode::kAlignmentFailed, "injected failure");
    const Extent ea{a.width(), a.height()};
    return make_model(WarpField::constant(Homography(), ea), Homography::translation(shift, 0.0), ea,
                      {b.width(), b.height()});
  }
};

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("aligning a frame with itself gives an identity warp") {
  const ImageU8 frame = render_pair(planar_scene(4)).a;
  const AlignmentModel m = align(frame, frame, StitchConfig{});
  double worst = 0.0;
  for (int y = 0; y < 480; y += 20) {
    for (int x = 0; x < 640; x += 20) {
      const Point2 p{double(x), double(y)};
      worst = std::max(worst, distance(m.map_a_point(p), m.map_b_point(p)));
    }
  }
  CHECK(worst < 0.5);
}

TEST_CASE("a planar pinhole pair aligns to under a pixel in both modes") {
  SceneSpec s = planar_scene(2);
  s.fisheye_focal = 1e7;
  const RenderedPair p = render_pair(s);
  StitchConfig c;
  const AlignmentModel multi = align(p.a, p.b, c);
  c.mode = AlignmentMode::kGlobal;
  const AlignmentModel global = align(p.a, p.b, c);
  const double rm = truth_rmse(multi, p.truth.inliers());
  const double rg = truth_rmse(global, p.truth.inliers());
  CHECK(rm < 1.0);
  CHECK(rg < 1.0);
  CHECK(std::abs(rm - rg) < 0.5);
}

TEST_CASE("supplied correspondences replace detection") {
  SceneSpec s = planar_scene(3);
  s.fisheye_focal = 1e7;
  s.correspondences = 150;
  const RenderedPair p = render_pair(s);
  const CorrespondenceSet truth = p.truth.inliers();
  const AlignmentModel m = align(p.a, p.b, StitchConfig{}, &truth);
  CHECK(m.diagnostics.matches == truth.size());
  CHECK(truth_rmse(m, truth) < 0.1);
}

TEST_CASE("featureless frames fail to align") {
  const ImageU8 flat(320, 240, 3, 90);
  try {
    align(flat, flat, small_config(320, 240));
    FAIL("alignment should fail");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kAlignmentFailed);
  }
}

TEST_CASE("identical inputs under the identity model reproduce the input") {
  const ImageU8 frame = textured(96, 64, 1);
  const AlignmentModel m = identity_model({96, 64});
  const StitchResult r = stitch_frame(frame, frame, m, FrameState{}, small_config(96, 64));
  CHECK(r.frame == frame);
}

TEST_CASE("a repeated static pair gives identical frames and seams") {
  const ImageU8 a = textured(120, 80, 2);
  const ImageU8 b = textured(120, 80, 3);
  const AlignmentModel m = make_model(WarpField::constant(Homography(), {120, 80}),
                                      Homography::translation(-40.0, 0.0), {120, 80}, {120, 80});
  const StitchConfig c = small_config(120, 80);
  const StitchResult first = stitch_frame(a, b, m, FrameState{}, c);
  const StitchResult second = stitch_frame(a, b, m, first.state, c);
  CHECK(first.frame == second.frame);
  CHECK(first.seam.path == second.seam.path);
  CHECK(second.seam_displacement == 0.0);
  CHECK(second.state.frame_index == 2);
}

TEST_CASE("the seam routes around a textured object on a flat scene") {
  SceneSpec s;
  s.width = 160;
  s.height = 120;
  s.planes.push_back({1, -1e9, 1e9, Homography()});
  s.flat_background = true;
  s.correspondences = 0;
  s.object = MovingObject{36.0, {58.0, 30.0}, {4.0, 2.0}, 17};
  const StitchConfig c = small_config(160, 120);
  const AlignmentModel m = identity_model({160, 120});
  FrameState state;
  for (int k = 0; k < 6; ++k) {
    const RenderedPair p = render_pair(s, k);
    const StitchResult r = stitch_frame(p.a, p.a, m, state, c);
    state = r.state;
    const Mask& obj = p.object_mask;
    auto interior = [&](int x, int y) {
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
          if (!obj.contains(x + dx, y + dy) || !obj.at(x + dx, y + dy)) return false;
      return true;
    };
    int hits = 0;
    for (const Pixel& q : r.seam.path) hits += interior(q.x, q.y);
    CHECK(hits == 0);
    CHECK(r.frame == p.a);
  }
}

TEST_CASE("aligning once serves the whole run") {
  int calls = 0;
  RunOptions opt;
  opt.aligner = CountingAligner{&calls, -30.0};
  const ImageU8 a = textured(96, 64, 4);
  std::vector<std::size_t> order;
  const RunStats stats = run(constant_stream(a, 10), constant_stream(a, 10), small_config(96, 64),
                             [&](std::size_t i, const ImageU8&, const StitchResult&) { order.push_back(i); }, opt);
  CHECK(calls == 1);
  CHECK(stats.alignments == 1);
  CHECK(stats.frames == 10);
  REQUIRE(order.size() == 10);
  for (std::size_t i = 0; i < 10; ++i) CHECK(order[i] == i);
  for (std::size_t i = 1; i < 10; ++i) CHECK(stats.seam_displacements[i] == 0.0);
  CHECK(stats.mean_seam_displacement() == 0.0);
}

TEST_CASE("a realign interval of five aligns at frames zero and five") {
  int calls = 0;
  RunOptions opt;
  opt.aligner = CountingAligner{&calls, -30.0};
  StitchConfig c = small_config(96, 64);
  c.realign_interval = 5;
  const ImageU8 a = textured(96, 64, 5);
  const RunStats stats = run(constant_stream(a, 10), constant_stream(a, 10), c, nullptr, opt);
  CHECK(calls == 2);
  CHECK(stats.alignment_frames == std::vector<std::size_t>{0, 5});
}

TEST_CASE("a failed re-alignment keeps the previous model") {
  int calls = 0;
  RunOptions opt;
  opt.aligner = CountingAligner{&calls, -30.0, 2};
  StitchConfig c = small_config(96, 64);
  c.realign_interval = 5;
  const ImageU8 a = textured(96, 64, 6);
  const ImageU8 b = textured(96, 64, 7);
  const AlignmentModel reference = CountingAligner{&calls, -30.0}(a, b, c);
  calls = 0;
  std::vector<ImageU8> frames;
  const RunStats stats = run(constant_stream(a, 10), constant_stream(b, 10), c,
                             [&](std::size_t, const ImageU8& f, const StitchResult&) { frames.push_back(f); }, opt);
  CHECK(stats.alignments == 1);
  CHECK(stats.alignment_failures == 1);
  CHECK(stats.alignment_frames == std::vector<std::size_t>{0});
  REQUIRE(frames.size() == 10);
  for (std::size_t i = 5; i < 10; ++i) {
    CHECK(frames[i].width() == reference.canvas.width);
    CHECK(frames[i] == frames[4]);
  }
  CHECK(format_report(stats, false).find("alignment_failures=1") != std::string::npos);
}

TEST_CASE("failing the first alignment aborts the run") {
  int calls = 0;
  RunOptions opt;
  opt.aligner = CountingAligner{&calls, 0.0, 1};
  const ImageU8 a = textured(64, 48, 8);
  try {
    run(constant_stream(a, 3), constant_stream(a, 3), small_config(64, 48), nullptr, opt);
    FAIL("run should throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kAlignmentFailed);
  }
}

TEST_CASE("mismatched stream lengths truncate to the shorter one") {
  int calls = 0;
  RunOptions opt;
  opt.aligner = CountingAligner{&calls, -20.0};
  const ImageU8 a = textured(64, 48, 9);
  const RunStats stats = run(constant_stream(a, 4), constant_stream(a, 6), small_config(64, 48), nullptr, opt);
  CHECK(stats.frames == 4);
  CHECK(stats.truncated);
  const std::string report = format_report(stats, false);
  CHECK(report.find("truncated=1") != std::string::npos);
  CHECK(report.find("warning=") != std::string::npos);
  CHECK(report.find("_ms_") == std::string::npos);
  CHECK(format_report(stats, true).find("blend_ms_p95=") != std::string::npos);
}

TEST_CASE("frames are resized to the configured input size") {
  int calls = 0;
  RunOptions opt;
  opt.aligner = CountingAligner{&calls, 0.0};
  std::vector<int> widths;
  const ImageU8 big = textured(128, 96, 10);
  run(constant_stream(big, 1), constant_stream(big, 1), small_config(64, 48),
      [&](std::size_t, const ImageU8& f, const StitchResult&) { widths.push_back(f.width()); }, opt);
  CHECK(widths == std::vector<int>{64});
}

TEST_CASE("timing summaries use interpolated percentiles") {
  const TimingSummary s = summarize({4.0, 1.0, 3.0, 2.0, 5.0});
  CHECK(s.mean == doctest::Approx(3.0));
  CHECK(s.p50 == doctest::Approx(3.0));
  CHECK(s.p95 == doctest::Approx(4.8));
  CHECK(summarize({}).mean == 0.0);
}

TEST_CASE("configuration invariants are enforced") {
  StitchConfig c;
  c.realign_interval = -1;
  CHECK_THROWS_AS(c.validate(), Error);
  c = StitchConfig{};
  c.selection.eps_r = 2.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = StitchConfig{};
  c.ratio = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
}

}  // TEST_SUITE
