#include "vstitch/blend.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "vstitch/error.hpp"

namespace vstitch {

namespace {

constexpr double kKernel[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};

inline int reflect(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
  }
  return i;
}

template <int C>
void reduce_row(const double* src, double* dst, int w, int ow, const std::vector<int>& idx, int c_dyn) {
  const int c = C > 0 ? C : c_dyn;
  // Outputs whose five taps need no reflection.
  const int lo = 1;
  const int hi = (w - 3) / 2;
  for (int x = 0; x < ow; ++x) {
    double* d = dst + static_cast<std::size_t>(x) * c;
    if (x >= lo && x <= hi) {
      const double* p = src + static_cast<std::size_t>(2 * x - 2) * c;
      for (int ch = 0; ch < c; ++ch) {
        d[ch] = kKernel[0] * p[ch] + kKernel[1] * p[c + ch] + kKernel[2] * p[2 * c + ch] +
                kKernel[3] * p[3 * c + ch] + kKernel[4] * p[4 * c + ch];
      }
      continue;
    }
    const int* ix = &idx[static_cast<std::size_t>(x) * 5];
    for (int ch = 0; ch < c; ++ch) {
      double acc = 0.0;
      for (int t = 0; t < 5; ++t) acc += kKernel[t] * src[ix[t] + ch];
      d[ch] = acc;
    }
  }
}

// Smooths along one axis and keeps every other sample.
RealImage reduce_axis(const RealImage& in, bool horizontal) {
  const int w = in.width();
  const int h = in.height();
  const int c = in.channels();
  const int ow = horizontal ? (w + 1) / 2 : w;
  const int oh = horizontal ? h : (h + 1) / 2;
  RealImage out(ow, oh, c);
  if (horizontal) {
    std::vector<int> idx(static_cast<std::size_t>(ow) * 5);
    for (int x = 0; x < ow; ++x) {
      for (int t = 0; t < 5; ++t) idx[static_cast<std::size_t>(x) * 5 + t] = reflect(2 * x + t - 2, w) * c;
    }
    for (int y = 0; y < h; ++y) {
      if (c == 3) {
        reduce_row<3>(in.row(y), out.row(y), w, ow, idx, c);
      } else if (c == 1) {
        reduce_row<1>(in.row(y), out.row(y), w, ow, idx, c);
      } else {
        reduce_row<0>(in.row(y), out.row(y), w, ow, idx, c);
      }
    }
  } else {
    const std::size_t n = static_cast<std::size_t>(w) * c;
    for (int y = 0; y < oh; ++y) {
      const double* r0 = in.row(reflect(2 * y - 2, h));
      const double* r1 = in.row(reflect(2 * y - 1, h));
      const double* r2 = in.row(reflect(2 * y, h));
      const double* r3 = in.row(reflect(2 * y + 1, h));
      const double* r4 = in.row(reflect(2 * y + 2, h));
      double* dst = out.row(y);
      for (std::size_t i = 0; i < n; ++i) {
        dst[i] = kKernel[0] * r0[i] + kKernel[1] * r1[i] + kKernel[2] * r2[i] + kKernel[3] * r3[i] +
                 kKernel[4] * r4[i];
      }
    }
  }
  return out;
}

struct Taps {
  int n = 0;
  int src[5] = {};
  double k[5] = {};
};

// Output sample o is 2 * sum_t k[t] * Z(o + t - 2), Z the zero-interleaved
// input, reflected at the output borders.
Taps expand_taps(int o, int out_len, int in_len) {
  Taps t;
  for (int j = 0; j < 5; ++j) {
    const int z = reflect(o + j - 2, out_len);
    if (z % 2 != 0) continue;
    t.src[t.n] = std::min(z / 2, in_len - 1);
    t.k[t.n] = 2.0 * kKernel[j];
    ++t.n;
  }
  return t;
}

template <int C>
void expand_row(const double* s, double* d, int ow, int in_len, const std::vector<Taps>& taps, int c_dyn) {
  const int c = C > 0 ? C : c_dyn;
  for (int x = 0; x < ow; ++x, d += c) {
    const int j = x / 2;
    if (x >= 2 && x + 2 < ow && j + 1 < in_len) {
      const double* p = s + static_cast<std::size_t>(j) * c;
      if (x % 2 == 0) {
        for (int ch = 0; ch < c; ++ch) d[ch] = 0.125 * p[ch - c] + 0.75 * p[ch] + 0.125 * p[ch + c];
      } else {
        for (int ch = 0; ch < c; ++ch) d[ch] = 0.5 * p[ch] + 0.5 * p[ch + c];
      }
      continue;
    }
    const Taps& t = taps[static_cast<std::size_t>(x)];
    for (int ch = 0; ch < c; ++ch) {
      double acc = 0.0;
      for (int i = 0; i < t.n; ++i) acc += t.k[i] * s[static_cast<std::size_t>(t.src[i]) * c + ch];
      d[ch] = acc;
    }
  }
}

RealImage expand_axis(const RealImage& in, int out_len, bool horizontal) {
  const int w = in.width();
  const int h = in.height();
  const int c = in.channels();
  const int ow = horizontal ? out_len : w;
  const int oh = horizontal ? h : out_len;
  const int in_len = horizontal ? w : h;
  std::vector<Taps> taps(static_cast<std::size_t>(out_len));
  for (int o = 0; o < out_len; ++o) taps[static_cast<std::size_t>(o)] = expand_taps(o, out_len, in_len);
  RealImage out(ow, oh, c);
  if (horizontal) {
    for (int y = 0; y < h; ++y) {
      if (c == 3) {
        expand_row<3>(in.row(y), out.row(y), ow, in_len, taps, c);
      } else if (c == 1) {
        expand_row<1>(in.row(y), out.row(y), ow, in_len, taps, c);
      } else {
        expand_row<0>(in.row(y), out.row(y), ow, in_len, taps, c);
      }
    }
  } else {
    const std::size_t len = static_cast<std::size_t>(w) * c;
    for (int y = 0; y < oh; ++y) {
      const Taps& t = taps[static_cast<std::size_t>(y)];
      double* d = out.row(y);
      if (t.n == 2) {
        const double* s0 = in.row(t.src[0]);
        const double* s1 = in.row(t.src[1]);
        for (std::size_t i = 0; i < len; ++i) d[i] = t.k[0] * s0[i] + t.k[1] * s1[i];
      } else if (t.n == 3) {
        const double* s0 = in.row(t.src[0]);
        const double* s1 = in.row(t.src[1]);
        const double* s2 = in.row(t.src[2]);
        for (std::size_t i = 0; i < len; ++i) d[i] = t.k[0] * s0[i] + t.k[1] * s1[i] + t.k[2] * s2[i];
      } else {
        std::fill_n(d, len, 0.0);
        for (int k = 0; k < t.n; ++k) {
          const double* s = in.row(t.src[k]);
          for (std::size_t i = 0; i < len; ++i) d[i] += t.k[k] * s[i];
        }
      }
    }
  }
  return out;
}

void check_levels(const RealImage& image, int levels) {
  if (levels < 1) throw Error(ErrorCode::kParameter, "pyramid needs at least one level");
  const int min_dim = std::min(image.width(), image.height());
  if (levels > 1 && (levels - 1 >= 31 || min_dim < (1 << (levels - 1)))) {
    throw Error(ErrorCode::kParameter, "too many pyramid levels (" + std::to_string(levels) +
                                           ") for a " + std::to_string(image.width()) + "x" +
                                           std::to_string(image.height()) + " image");
  }
}

void require_same_shape(const RealImage& a, const RealImage& b, const char* what) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw Error(ErrorCode::kParameter, std::string(what) + " dimensions differ");
  }
}

}  // namespace

WeightMask seam_to_weight_mask(const Seam& seam, const PixelRect& rect, const Mask& mask_a,
                               const Mask& mask_b) {
  const int w = rect.width();
  const int h = rect.height();
  std::vector<int> left_edge(static_cast<std::size_t>(h), -1);
  for (const Pixel& p : seam.path) {
    const int y = p.y - rect.y0;
    if (y < 0 || y >= h) continue;
    int& e = left_edge[static_cast<std::size_t>(y)];
    e = e < 0 ? p.x - rect.x0 : std::min(e, p.x - rect.x0);
  }
  WeightMask out{RealImage(w, h, 1, 0.0)};
  for (int y = 0; y < h; ++y) {
    const int edge = left_edge[static_cast<std::size_t>(y)];
    const std::uint8_t* ra = mask_a.row(y);
    const std::uint8_t* rb = mask_b.row(y);
    double* dst = out.w.row(y);
    for (int x = 0; x < w; ++x) {
      if (ra[x] && rb[x]) {
        dst[x] = x < edge ? 1.0 : 0.0;
      } else if (ra[x]) {
        dst[x] = 1.0;
      }
    }
  }
  return out;
}

WeightMask seam_to_weight_mask(const Seam& seam, const CanvasExtent& canvas, const Mask& mask_a,
                               const Mask& mask_b) {
  return seam_to_weight_mask(seam, PixelRect{0, 0, canvas.width - 1, canvas.height - 1}, mask_a, mask_b);
}

RealImage reduce(const RealImage& image) { return reduce_axis(reduce_axis(image, true), false); }

RealImage expand(const RealImage& image, int width, int height) {
  return expand_axis(expand_axis(image, width, true), height, false);
}

Pyramid build_gaussian_pyramid(const RealImage& image, int levels) {
  check_levels(image, levels);
  Pyramid p{PyramidKind::kGaussian, {}};
  p.levels.reserve(static_cast<std::size_t>(levels));
  p.levels.push_back(image);
  for (int k = 1; k < levels; ++k) p.levels.push_back(reduce(p.levels.back()));
  return p;
}

Pyramid build_laplacian_pyramid(const RealImage& image, int levels) {
  Pyramid g = build_gaussian_pyramid(image, levels);
  for (int k = 0; k + 1 < levels; ++k) {
    RealImage& fine = g.levels[static_cast<std::size_t>(k)];
    const RealImage up = expand(g.levels[static_cast<std::size_t>(k + 1)], fine.width(), fine.height());
    auto f = fine.data();
    auto u = up.data();
    for (std::size_t i = 0; i < f.size(); ++i) f[i] -= u[i];
  }
  g.kind = PyramidKind::kLaplacian;
  return g;
}

RealImage collapse_pyramid(const Pyramid& laplacian) {
  if (laplacian.levels.empty()) throw Error(ErrorCode::kParameter, "empty pyramid");
  RealImage acc = laplacian.levels.back();
  for (int k = laplacian.level_count() - 2; k >= 0; --k) {
    const RealImage& band = laplacian.levels[static_cast<std::size_t>(k)];
    RealImage up = expand(acc, band.width(), band.height());
    auto u = up.data();
    auto b = band.data();
    for (std::size_t i = 0; i < u.size(); ++i) u[i] += b[i];
    acc = std::move(up);
  }
  return acc;
}

Pyramid blend_pyramids(const Pyramid& lap_a, const Pyramid& lap_b, const Pyramid& weight_pyramid) {
  if (lap_a.level_count() != lap_b.level_count() || lap_a.level_count() != weight_pyramid.level_count()) {
    throw Error(ErrorCode::kParameter, "pyramid level counts differ");
  }
  Pyramid out{PyramidKind::kLaplacian, {}};
  for (int k = 0; k < lap_a.level_count(); ++k) {
    const auto idx = static_cast<std::size_t>(k);
    const RealImage& a = lap_a.levels[idx];
    const RealImage& b = lap_b.levels[idx];
    const RealImage& g = weight_pyramid.levels[idx];
    require_same_shape(a, b, "pyramid level");
    require_same_shape(a, g, "weight level");
    if (a.channels() != b.channels()) throw Error(ErrorCode::kParameter, "pyramid channel counts differ");
    RealImage level(a.width(), a.height(), a.channels());
    const int c = a.channels();
    auto pa = a.data();
    auto pb = b.data();
    auto pg = g.data();
    auto po = level.data();
    for (std::size_t i = 0; i < pg.size(); ++i) {
      const double wa = pg[i];
      const double wb = 1.0 - wa;
      for (int ch = 0; ch < c; ++ch) {
        const std::size_t j = i * c + ch;
        po[j] = wa * pa[j] + wb * pb[j];
      }
    }
    out.levels.push_back(std::move(level));
  }
  return out;
}

Pyramid blend_pyramids(const Pyramid& lap_a, const Pyramid& lap_b, const WeightMask& weight) {
  return blend_pyramids(lap_a, lap_b, build_gaussian_pyramid(weight.w, lap_a.level_count()));
}

int default_pyramid_levels(int width, int height) {
  const int min_dim = std::max(1, std::min(width, height));
  const int lg = std::bit_width(static_cast<unsigned>(min_dim)) - 1;
  return std::clamp(lg - 2, 2, 6);
}

int feasible_pyramid_levels(int width, int height, int requested) {
  const int min_dim = std::max(1, std::min(width, height));
  const int max_levels = std::bit_width(static_cast<unsigned>(min_dim));
  return std::clamp(requested, 1, max_levels);
}

RealImage fill_invalid(const RealImage& image, const Mask& mask) {
  const int w = image.width();
  const int h = image.height();
  const int c = image.channels();
  RealImage out = image;
  std::vector<char> row_ok(static_cast<std::size_t>(h), 0);
  std::vector<int> nearest(static_cast<std::size_t>(w));
  for (int y = 0; y < h; ++y) {
    int last = -1;
    for (int x = 0; x < w; ++x) {
      if (mask.at(x, y)) last = x;
      nearest[static_cast<std::size_t>(x)] = last;
    }
    if (last < 0) continue;
    row_ok[static_cast<std::size_t>(y)] = 1;
    int next = -1;
    for (int x = w - 1; x >= 0; --x) {
      if (mask.at(x, y)) {
        next = x;
        continue;
      }
      const int left = nearest[static_cast<std::size_t>(x)];
      int src = next;
      if (left >= 0 && (next < 0 || x - left <= next - x)) src = left;
      for (int ch = 0; ch < c; ++ch) out.at(x, y, ch) = image.at(src, y, ch);
    }
  }
  const std::size_t n = static_cast<std::size_t>(w) * c;
  int last_ok = -1;
  std::vector<int> nearest_row(static_cast<std::size_t>(h));
  for (int y = 0; y < h; ++y) {
    if (row_ok[static_cast<std::size_t>(y)]) last_ok = y;
    nearest_row[static_cast<std::size_t>(y)] = last_ok;
  }
  int next_ok = -1;
  for (int y = h - 1; y >= 0; --y) {
    if (row_ok[static_cast<std::size_t>(y)]) {
      next_ok = y;
      continue;
    }
    const int above = nearest_row[static_cast<std::size_t>(y)];
    int src = next_ok;
    if (above >= 0 && (next_ok < 0 || y - above <= next_ok - y)) src = above;
    if (src >= 0) std::copy_n(out.row(src), n, out.row(y));
  }
  return out;
}

RealImage blend_region(const RealImage& a, const Mask& mask_a, const RealImage& b, const Mask& mask_b,
                       const RealImage& weight, int levels) {
  require_same_shape(a, b, "blend image");
  require_same_shape(a, weight, "weight");
  const int n = feasible_pyramid_levels(a.width(), a.height(), levels);
  const Pyramid la = build_laplacian_pyramid(fill_invalid(a, mask_a), n);
  const Pyramid lb = build_laplacian_pyramid(fill_invalid(b, mask_b), n);
  const Pyramid gw = build_gaussian_pyramid(weight, n);
  return collapse_pyramid(blend_pyramids(la, lb, gw));
}

ImageU8 blend_warped(const WarpedImage& a, const WarpedImage& b, const WeightMask& weight,
                     const PixelRect& bounds, int levels) {
  require_same_shape(a.pixels, b.pixels, "warped image");
  require_same_shape(a.pixels, weight.w, "weight mask");
  const int w = a.pixels.width();
  const int h = a.pixels.height();
  const int c = a.pixels.channels();
  if (b.pixels.channels() != c) throw Error(ErrorCode::kParameter, "warped image channel counts differ");

  ImageU8 out(w, h, c, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const RealImage* src = nullptr;
      if (a.mask.at(x, y) && (!b.mask.at(x, y) || weight.w.at(x, y) >= 0.5)) {
        src = &a.pixels;
      } else if (b.mask.at(x, y)) {
        src = &b.pixels;
      }
      if (!src) continue;
      for (int ch = 0; ch < c; ++ch) out.at(x, y, ch) = to_byte(src->at(x, y, ch));
    }
  }
  if (bounds.width() <= 0 || bounds.height() <= 0) return out;

  const Mask ma = crop(a.mask, bounds);
  const Mask mb = crop(b.mask, bounds);
  const RealImage blended = blend_region(crop(a.pixels, bounds), ma, crop(b.pixels, bounds), mb,
                                         crop(weight.w, bounds), levels > 0 ? levels : default_pyramid_levels(w, h));
  for (int y = 0; y < bounds.height(); ++y) {
    for (int x = 0; x < bounds.width(); ++x) {
      if (!ma.at(x, y) || !mb.at(x, y)) continue;
      for (int ch = 0; ch < c; ++ch) out.at(x + bounds.x0, y + bounds.y0, ch) = to_byte(blended.at(x, y, ch));
    }
  }
  return out;
}

}  // namespace vstitch
