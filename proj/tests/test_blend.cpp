#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>

#include "test_support.hpp"
#include "vstitch/blend.hpp"
#include "vstitch/error.hpp"
#include "vstitch/seam.hpp"

using namespace vstitch;

namespace {

RealImage noise(std::mt19937_64& rng, int w, int h, int c, double lo = 0.0, double hi = 255.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  RealImage img(w, h, c);
  for (auto& v : img.data()) v = u(rng);
  return img;
}

double max_abs_diff(const RealImage& a, const RealImage& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

int reflect101(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n - 2;
  const int m = ((i % period) + period) % period;
  return m < n ? m : period - m;
}

// Full 2D convolution with the outer-product kernel, then decimation.
RealImage direct_reduce(const RealImage& in) {
  const double k[5] = {1, 4, 6, 4, 1};
  RealImage out((in.width() + 1) / 2, (in.height() + 1) / 2, in.channels());
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      for (int c = 0; c < in.channels(); ++c) {
        double s = 0.0;
        for (int j = 0; j < 5; ++j)
          for (int i = 0; i < 5; ++i)
            s += k[i] * k[j] * in.at(reflect101(2 * x + i - 2, in.width()), reflect101(2 * y + j - 2, in.height()), c);
        out.at(x, y, c) = s / 256.0;
      }
    }
  }
  return out;
}

// Pixels reachable from the left canvas edge with 4-connected moves that
// avoid the seam, restricted to the rows the seam spans.
Raster<char> flood_left(const Seam& seam, int w, int h) {
  Raster<char> blocked(w, h, 1, 0);
  Raster<char> reached(w, h, 1, 0);
  int y0 = h;
  int y1 = -1;
  for (const Pixel& p : seam.path) {
    blocked.at(p.x, p.y) = 1;
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  std::deque<Pixel> queue;
  for (int y = y0; y <= y1; ++y) {
    if (!blocked.at(0, y)) {
      reached.at(0, y) = 1;
      queue.push_back({0, y});
    }
  }
  while (!queue.empty()) {
    const Pixel p = queue.front();
    queue.pop_front();
    const int dx[4] = {1, -1, 0, 0};
    const int dy[4] = {0, 0, 1, -1};
    for (int d = 0; d < 4; ++d) {
      const int nx = p.x + dx[d];
      const int ny = p.y + dy[d];
      if (nx < 0 || nx >= w || ny < y0 || ny > y1) continue;
      if (blocked.at(nx, ny) || reached.at(nx, ny)) continue;
      reached.at(nx, ny) = 1;
      queue.push_back({nx, ny});
    }
  }
  return reached;
}

WarpedImage full_warped(const RealImage& pixels) {
  return {pixels, Mask(pixels.width(), pixels.height(), 1, 1)};
}

}  // namespace

TEST_SUITE("blend") {

TEST_CASE("straight seam splits the overlap at its column") {
  const Mask m(20, 10, 1, 1);
  const Seam s{[] {
    std::vector<Pixel> p;
    for (int y = 0; y < 10; ++y) p.push_back({7, y});
    return p;
  }()};
  const WeightMask w = seam_to_weight_mask(s, {{0, 0}, 20, 10}, m, m);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 20; ++x) CHECK(w.w.at(x, y) == (x < 7 ? 1.0 : 0.0));
}

TEST_CASE("seam on the overlap boundary hands the overlap to one image") {
  Mask a(30, 8, 1, 0);
  Mask b(30, 8, 1, 0);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 20; ++x) a.at(x, y) = 1;
    for (int x = 10; x < 30; ++x) b.at(x, y) = 1;
  }
  Seam s;
  for (int y = 0; y < 8; ++y) s.path.push_back({10, y});
  const WeightMask w = seam_to_weight_mask(s, {{0, 0}, 30, 8}, a, b);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 30; ++x) {
      if (x < 10) CHECK(w.w.at(x, y) == 1.0);
      else CHECK(w.w.at(x, y) == 0.0);
    }
  }
}

TEST_CASE("snaking seam labels match a flood fill from the left edge") {
  std::mt19937_64 rng(41);
  std::uniform_int_distribution<int> u(0, 9);
  for (int trial = 0; trial < 50; ++trial) {
    const int w = 30;
    const int h = 20;
    const Mask m(w, h, 1, 1);
    const OverlapRegion r = compute_overlap(m, m);
    CostField c;
    c.bounds = r.bounds;
    c.e = RealImage(w, h, 1);
    for (auto& v : c.e.data()) v = u(rng);
    const Seam s = find_seam(c, r);
    const WeightMask wm = seam_to_weight_mask(s, {{0, 0}, w, h}, m, m);
    const Raster<char> left = flood_left(s, w, h);
    int mismatches = 0;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) mismatches += (wm.w.at(x, y) == 1.0) != (left.at(x, y) == 1);
    CHECK(mismatches == 0);
  }
}

TEST_CASE("exclusive pixels belong to the covering image") {
  Mask a(12, 4, 1, 0);
  Mask b(12, 4, 1, 0);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 8; ++x) a.at(x, y) = 1;
    for (int x = 4; x < 12; ++x) b.at(x, y) = 1;
  }
  Seam s;
  for (int y = 0; y < 4; ++y) s.path.push_back({6, y});
  const WeightMask w = seam_to_weight_mask(s, {{0, 0}, 12, 4}, a, b);
  CHECK(w.w.at(1, 2) == 1.0);
  CHECK(w.w.at(5, 2) == 1.0);
  CHECK(w.w.at(6, 2) == 0.0);
  CHECK(w.w.at(11, 2) == 0.0);
}

TEST_CASE("gaussian pyramid of a constant is constant") {
  const RealImage img(37, 23, 3, 91.5);
  const Pyramid p = build_gaussian_pyramid(img, 4);
  REQUIRE(p.level_count() == 4);
  for (const RealImage& level : p.levels)
    for (double v : level.data()) CHECK(v == doctest::Approx(91.5));
  CHECK(p.levels[1].width() == 19);
  CHECK(p.levels[1].height() == 12);
  CHECK(p.levels[3].width() == 5);
  CHECK(p.levels[3].height() == 3);
}

TEST_CASE("single-level pyramid is the input") {
  std::mt19937_64 rng(2);
  const RealImage img = noise(rng, 9, 7, 1);
  CHECK(build_gaussian_pyramid(img, 1).levels.front() == img);
  CHECK(build_laplacian_pyramid(img, 1).levels.front() == img);
}

TEST_CASE("impulse response of one reduction is the binomial kernel") {
  RealImage img(17, 17, 1, 0.0);
  img.at(8, 8) = 256.0;
  const RealImage r = reduce(img);
  const double k[3] = {1, 6, 1};
  for (int y = 0; y < r.height(); ++y) {
    for (int x = 0; x < r.width(); ++x) {
      const bool near = std::abs(x - 4) <= 1 && std::abs(y - 4) <= 1;
      const double expected = near ? k[x - 3] * k[y - 3] : 0.0;
      CHECK(r.at(x, y) == doctest::Approx(expected));
    }
  }
}

TEST_CASE("reduce matches direct 2D convolution with reflection") {
  std::mt19937_64 rng(6);
  for (auto [w, h] : {std::pair{16, 16}, std::pair{15, 9}, std::pair{2, 5}, std::pair{1, 1}}) {
    const RealImage img = noise(rng, w, h, 3);
    CHECK(max_abs_diff(reduce(img), direct_reduce(img)) < 1e-9);
  }
}

TEST_CASE("too many levels is a parameter error") {
  const RealImage img(16, 7, 1, 0.0);
  CHECK_NOTHROW(build_gaussian_pyramid(img, 3));
  try {
    build_gaussian_pyramid(img, 4);
    FAIL("expected parameter error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kParameter);
  }
  CHECK_THROWS_AS(build_laplacian_pyramid(img, 0), Error);
}

TEST_CASE("laplacian of a constant has zero bands") {
  const RealImage img(40, 30, 1, 12.0);
  const Pyramid p = build_laplacian_pyramid(img, 4);
  CHECK(p.kind == PyramidKind::kLaplacian);
  for (int k = 0; k < 3; ++k)
    for (double v : p.levels[k].data()) CHECK(std::abs(v) < 1e-12);
  for (double v : p.levels[3].data()) CHECK(v == doctest::Approx(12.0));
}

TEST_CASE("collapse inverts the laplacian pyramid") {
  std::mt19937_64 rng(13);
  for (auto [w, h] : {std::pair{64, 48}, std::pair{53, 37}, std::pair{100, 9}}) {
    const RealImage img = noise(rng, w, h, 3);
    const int levels = feasible_pyramid_levels(w, h, 4);
    const RealImage back = collapse_pyramid(build_laplacian_pyramid(img, levels));
    CHECK(max_abs_diff(img, back) < 1e-6);
  }
}

TEST_CASE("8-bit round trip stays within one level") {
  std::mt19937_64 rng(17);
  const ImageU8 img = testing::random_rgb(rng, 80, 60);
  const ImageU8 back = to_u8(collapse_pyramid(build_laplacian_pyramid(to_real(img), 5)));
  int worst = 0;
  for (std::size_t i = 0; i < img.data().size(); ++i)
    worst = std::max(worst, std::abs(int(img.data()[i]) - int(back.data()[i])));
  CHECK(worst <= 1);
}

TEST_CASE("collapse of zeros is zero") {
  const Pyramid p = build_laplacian_pyramid(RealImage(20, 20, 2, 0.0), 3);
  const RealImage out = collapse_pyramid(p);
  for (double v : out.data()) CHECK(v == 0.0);
}

TEST_CASE("unit weight selects the first pyramid") {
  std::mt19937_64 rng(19);
  const Pyramid a = build_laplacian_pyramid(noise(rng, 32, 24, 3), 3);
  const Pyramid b = build_laplacian_pyramid(noise(rng, 32, 24, 3), 3);
  const Pyramid out = blend_pyramids(a, b, WeightMask{RealImage(32, 24, 1, 1.0)});
  for (int k = 0; k < 3; ++k) CHECK(max_abs_diff(out.levels[k], a.levels[k]) == 0.0);
}

TEST_CASE("equal pyramids blend to themselves under any weight") {
  std::mt19937_64 rng(23);
  const Pyramid a = build_laplacian_pyramid(noise(rng, 32, 24, 3), 3);
  const WeightMask w{noise(rng, 32, 24, 1, 0.0, 1.0)};
  const Pyramid out = blend_pyramids(a, a, w);
  for (int k = 0; k < 3; ++k) CHECK(max_abs_diff(out.levels[k], a.levels[k]) < 1e-9);
}

TEST_CASE("blending is convex at every level") {
  std::mt19937_64 rng(29);
  const Pyramid a = build_laplacian_pyramid(noise(rng, 40, 30, 3), 4);
  const Pyramid b = build_laplacian_pyramid(noise(rng, 40, 30, 3), 4);
  RealImage wr(40, 30, 1);
  std::bernoulli_distribution coin(0.5);
  for (auto& v : wr.data()) v = coin(rng);
  const Pyramid out = blend_pyramids(a, b, WeightMask{wr});
  for (int k = 0; k < 4; ++k) {
    for (std::size_t i = 0; i < out.levels[k].data().size(); ++i) {
      const double x = a.levels[k].data()[i];
      const double y = b.levels[k].data()[i];
      const double o = out.levels[k].data()[i];
      CHECK(o >= std::min(x, y) - 1e-9);
      CHECK(o <= std::max(x, y) + 1e-9);
    }
  }
}

TEST_CASE("mismatched pyramids are rejected") {
  const Pyramid a = build_laplacian_pyramid(RealImage(16, 16, 1, 0.0), 3);
  const Pyramid b = build_laplacian_pyramid(RealImage(16, 16, 1, 0.0), 2);
  CHECK_THROWS_AS(blend_pyramids(a, b, WeightMask{RealImage(16, 16, 1, 1.0)}), Error);
  const Pyramid c = build_laplacian_pyramid(RealImage(18, 16, 1, 0.0), 3);
  CHECK_THROWS_AS(blend_pyramids(a, c, WeightMask{RealImage(16, 16, 1, 1.0)}), Error);
}

TEST_CASE("step blend profile is monotone and widens with levels") {
  const int w = 128;
  const int h = 16;
  const RealImage black(w, h, 1, 0.0);
  const RealImage white(w, h, 1, 255.0);
  RealImage wr(w, h, 1, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < 64; ++x) wr.at(x, y) = 1.0;
  int last_width = 0;
  for (int levels = 1; levels <= 5; ++levels) {
    const RealImage out = collapse_pyramid(
        blend_pyramids(build_laplacian_pyramid(black, levels), build_laplacian_pyramid(white, levels), WeightMask{wr}));
    for (int y = 0; y < h; ++y)
      for (int x = 1; x < w; ++x) CHECK(out.at(x, y) >= out.at(x - 1, y) - 1e-9);
    int width = 0;
    for (int x = 0; x < w; ++x) width += out.at(x, h / 2) > 0.5 && out.at(x, h / 2) < 254.5;
    CHECK(width >= last_width);
    if (levels > 1) CHECK(width > last_width);
    last_width = width;
  }
}

TEST_CASE("blending identical images returns the image") {
  std::mt19937_64 rng(31);
  const ImageU8 img = testing::random_rgb(rng, 64, 48);
  const RealImage real = to_real(img);
  Seam s;
  for (int y = 0; y < 48; ++y) s.path.push_back({20 + (y % 7), y});
  const Mask m(64, 48, 1, 1);
  const WeightMask w = seam_to_weight_mask(s, {{0, 0}, 64, 48}, m, m);
  CHECK(blend_warped(full_warped(real), full_warped(real), w, {0, 0, 63, 47}, 4) == img);
}

TEST_CASE("swapping inputs and complementing the weight gives the same frame") {
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 10; ++trial) {
    const int w = 60;
    const int h = 40;
    Mask ma(w, h, 1, 0);
    Mask mb(w, h, 1, 0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < 40; ++x) ma.at(x, y) = 1;
      for (int x = 15; x < w; ++x) mb.at(x, y) = 1;
    }
    const OverlapRegion r = compute_overlap(ma, mb);
    CostField c;
    c.bounds = r.bounds;
    c.e = noise(rng, r.bounds.width(), r.bounds.height(), 1, 0.0, 5.0);
    const Seam s = find_seam(c, r);
    const WeightMask wm = seam_to_weight_mask(s, {{0, 0}, w, h}, ma, mb);
    WeightMask flipped = wm;
    for (auto& v : flipped.w.data()) v = 1.0 - v;
    const WarpedImage a{noise(rng, w, h, 3), ma};
    const WarpedImage b{noise(rng, w, h, 3), mb};
    CHECK(blend_warped(a, b, wm, r.bounds) == blend_warped(b, a, flipped, r.bounds));
  }
}

TEST_CASE("exclusive pixels pass through unblended") {
  std::mt19937_64 rng(43);
  const int w = 50;
  const int h = 30;
  Mask ma(w, h, 1, 0);
  Mask mb(w, h, 1, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < 30; ++x) ma.at(x, y) = 1;
    for (int x = 20; x < w; ++x) mb.at(x, y) = 1;
  }
  const ImageU8 ia = testing::random_rgb(rng, w, h);
  const ImageU8 ib = testing::random_rgb(rng, w, h);
  const OverlapRegion r = compute_overlap(ma, mb);
  Seam s;
  for (int y = 0; y < h; ++y) s.path.push_back({25, y});
  const WeightMask wm = seam_to_weight_mask(s, {{0, 0}, w, h}, ma, mb);
  const ImageU8 out = blend_warped({to_real(ia), ma}, {to_real(ib), mb}, wm, r.bounds);
  for (int y = 0; y < h; ++y) {
    for (int c = 0; c < 3; ++c) {
      for (int x = 0; x < 20; ++x) CHECK(out.at(x, y, c) == ia.at(x, y, c));
      for (int x = 30; x < w; ++x) CHECK(out.at(x, y, c) == ib.at(x, y, c));
    }
  }
}

TEST_CASE("invalid pixels take the nearest valid value") {
  RealImage img(5, 3, 1, 0.0);
  Mask m(5, 3, 1, 0);
  img.at(1, 0) = 10;
  m.at(1, 0) = 1;
  img.at(4, 0) = 40;
  m.at(4, 0) = 1;
  img.at(2, 2) = 7;
  m.at(2, 2) = 1;
  const RealImage f = fill_invalid(img, m);
  const double row0[5] = {10, 10, 10, 40, 40};
  for (int x = 0; x < 5; ++x) CHECK(f.at(x, 0) == row0[x]);
  for (int x = 0; x < 5; ++x) CHECK(f.at(x, 1) == row0[x]);
  for (int x = 0; x < 5; ++x) CHECK(f.at(x, 2) == 7);
}

TEST_CASE("default pyramid depth follows the canvas") {
  CHECK(default_pyramid_levels(640, 480) == 6);
  CHECK(default_pyramid_levels(100, 50) == 3);
  CHECK(default_pyramid_levels(8, 8) == 2);
  CHECK(feasible_pyramid_levels(16, 7, 6) == 3);
}

}
