#include "vstitch/image.hpp"

#include <algorithm>
#include <cmath>

namespace vstitch {

RealImage to_real(const ImageU8& image) {
  RealImage out(image.width(), image.height(), image.channels());
  std::ranges::transform(image.data(), out.data().begin(),
                         [](std::uint8_t v) { return static_cast<double>(v); });
  return out;
}

ImageU8 to_u8(const RealImage& image) {
  ImageU8 out(image.width(), image.height(), image.channels());
  std::ranges::transform(image.data(), out.data().begin(), [](double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
  });
  return out;
}

namespace {

template <typename T>
RealImage gray_of(const Raster<T>& image) {
  RealImage out(image.width(), image.height(), 1);
  for (int y = 0; y < image.height(); ++y) {
    const T* src = image.row(y);
    double* dst = out.row(y);
    for (int x = 0; x < image.width(); ++x) {
      if (image.channels() >= 3) {
        const T* p = src + static_cast<std::size_t>(x) * image.channels();
        dst[x] = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
      } else {
        dst[x] = static_cast<double>(src[static_cast<std::size_t>(x) * image.channels()]);
      }
    }
  }
  return out;
}

}  // namespace

RealImage to_gray(const RealImage& image) { return gray_of(image); }
RealImage to_gray(const ImageU8& image) { return gray_of(image); }

double sample_bilinear(const RealImage& image, double x, double y, int c) {
  const int w = image.width();
  const int h = image.height();
  x = std::clamp(x, 0.0, static_cast<double>(w - 1));
  y = std::clamp(y, 0.0, static_cast<double>(h - 1));
  const int x0 = static_cast<int>(x);
  const int y0 = static_cast<int>(y);
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double top = image.at(x0, y0, c) * (1.0 - fx) + image.at(x1, y0, c) * fx;
  const double bottom = image.at(x0, y1, c) * (1.0 - fx) + image.at(x1, y1, c) * fx;
  return top * (1.0 - fy) + bottom * fy;
}

ImageU8 resize_bilinear(const ImageU8& image, int width, int height) {
  if (image.width() == width && image.height() == height) return image;
  const RealImage src = to_real(image);
  RealImage out(width, height, image.channels());
  const double sx = static_cast<double>(image.width()) / width;
  const double sy = static_cast<double>(image.height()) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = (y + 0.5) * sy - 0.5;
    for (int x = 0; x < width; ++x) {
      const double fx = (x + 0.5) * sx - 0.5;
      for (int c = 0; c < image.channels(); ++c) {
        out.at(x, y, c) = sample_bilinear(src, fx, fy, c);
      }
    }
  }
  return to_u8(out);
}

}  // namespace vstitch
