#include "vstitch/diagnostics.hpp"

#include <cmath>

#include "vstitch/error.hpp"

namespace vstitch {

namespace {

ImageU8 as_rgb(const ImageU8& image) {
  if (image.channels() == 3) return image;
  ImageU8 out(image.width(), image.height(), 3);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = image.at(x, y, 0);
    }
  }
  return out;
}

void paint(ImageU8& image, int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  if (!image.contains(x, y)) return;
  image.at(x, y, 0) = r;
  image.at(x, y, 1) = g;
  image.at(x, y, 2) = b;
}

void line(ImageU8& image, Point2 p, Point2 q) {
  const int steps = std::max(1, static_cast<int>(std::ceil(distance(p, q))));
  for (int i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) / steps;
    paint(image, static_cast<int>(std::lround(p.x + t * (q.x - p.x))),
          static_cast<int>(std::lround(p.y + t * (q.y - p.y))), 0, 255, 0);
  }
}

}  // namespace

ImageU8 seam_overlay(const ImageU8& frame, const Seam& seam, const OverlapRegion& region) {
  ImageU8 out = as_rgb(frame);
  if (region.mask.width() == out.width() && region.mask.height() == out.height()) {
    const PixelRect& b = region.bounds;
    for (int y = b.y0; y <= b.y1; ++y) {
      for (int x = b.x0; x <= b.x1; ++x) {
        if (!region.on_mask(x, y)) continue;
        if (!region.on_mask(x - 1, y) || !region.on_mask(x + 1, y) || !region.on_mask(x, y - 1) ||
            !region.on_mask(x, y + 1)) {
          paint(out, x, y, 255, 255, 0);
        }
      }
    }
  }
  for (const Pixel& p : seam.path) paint(out, p.x, p.y, 255, 0, 0);
  return out;
}

ImageU8 inlier_overlay(const ImageU8& frame_a, const ImageU8& frame_b, const CorrespondenceSet& inliers) {
  const ImageU8 a = as_rgb(frame_a);
  const ImageU8 b = as_rgb(frame_b);
  ImageU8 out(a.width() + b.width(), std::max(a.height(), b.height()), 3, 0);
  for (int y = 0; y < a.height(); ++y) std::copy_n(a.row(y), a.width() * 3, out.row(y));
  for (int y = 0; y < b.height(); ++y) std::copy_n(b.row(y), b.width() * 3, out.row(y) + a.width() * 3);
  const Point2 shift{static_cast<double>(a.width()), 0.0};
  for (const Correspondence& c : inliers) line(out, c.src, c.dst + shift);
  return out;
}

}  // namespace vstitch
