#pragma once

#include <algorithm>
#include <cassert>
#include <cstdint>
#include <span>
#include <vector>

namespace vstitch {

// Interleaved, row-major raster.
template <typename T>
class Raster {
 public:
  using value_type = T;

  Raster() = default;
  Raster(int width, int height, int channels = 1, T fill = T{})
      : width_(width),
        height_(height),
        channels_(channels),
        data_(static_cast<std::size_t>(width) * height * channels, fill) {
    assert(width >= 0 && height >= 0 && channels > 0);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  bool empty() const noexcept { return data_.empty(); }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * height_;
  }

  bool contains(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  T& at(int x, int y, int c = 0) noexcept {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  const T& at(int x, int y, int c = 0) const noexcept {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }

  T* row(int y) noexcept {
    return data_.data() + static_cast<std::size_t>(y) * width_ * channels_;
  }
  const T* row(int y) const noexcept {
    return data_.data() + static_cast<std::size_t>(y) * width_ * channels_;
  }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 1;
  std::vector<T> data_;
};

// Inclusive pixel rectangle.
struct PixelRect {
  int x0 = 0;
  int y0 = 0;
  int x1 = -1;
  int y1 = -1;

  int width() const noexcept { return x1 - x0 + 1; }
  int height() const noexcept { return y1 - y0 + 1; }
  bool contains(int x, int y) const noexcept { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }

  friend bool operator==(const PixelRect&, const PixelRect&) = default;
};

using ImageU8 = Raster<std::uint8_t>;
using RealImage = Raster<double>;
// Nonzero means valid.
using Mask = Raster<std::uint8_t>;

RealImage to_real(const ImageU8& image);
// Rounds to nearest and clamps to [0, 255].
ImageU8 to_u8(const RealImage& image);

// Round half up, saturating; NaN maps to 0.
inline std::uint8_t to_byte(double v) {
  if (!(v > 0.0)) return 0;
  if (v >= 255.0) return 255;
  return static_cast<std::uint8_t>(v + 0.5);
}
// Rec.601 luma for 3-channel input; passthrough copy for 1 channel.
RealImage to_gray(const RealImage& image);
RealImage to_gray(const ImageU8& image);

template <typename T>
Raster<T> crop(const Raster<T>& image, const PixelRect& r) {
  Raster<T> out(r.width(), r.height(), image.channels());
  const std::size_t n = static_cast<std::size_t>(r.width()) * image.channels();
  for (int y = 0; y < r.height(); ++y) {
    const T* src = image.row(y + r.y0) + static_cast<std::size_t>(r.x0) * image.channels();
    std::copy(src, src + n, out.row(y));
  }
  return out;
}

// Bilinear sample of channel c; coordinates are clamped to the raster.
double sample_bilinear(const RealImage& image, double x, double y, int c = 0);

// Bilinear resize (pixel-center aligned).
ImageU8 resize_bilinear(const ImageU8& image, int width, int height);

}  // namespace vstitch
