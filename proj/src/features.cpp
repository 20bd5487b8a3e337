#include "vstitch/features.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace vstitch {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Separable convolution with a symmetric kernel, replicated borders.
RealImage convolve(const RealImage& src, std::span<const double> kernel) {
  const int r = static_cast<int>(kernel.size() / 2);
  const int w = src.width();
  const int h = src.height();
  RealImage tmp(w, h, 1);
  RealImage out(w, h, 1);
  for (int y = 0; y < h; ++y) {
    const double* in = src.row(y);
    double* o = tmp.row(y);
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -r; k <= r; ++k) acc += kernel[k + r] * in[std::clamp(x + k, 0, w - 1)];
      o[x] = acc;
    }
  }
  for (int y = 0; y < h; ++y) {
    double* o = out.row(y);
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -r; k <= r; ++k) acc += kernel[k + r] * tmp.at(x, std::clamp(y + k, 0, h - 1));
      o[x] = acc;
    }
  }
  return out;
}

std::vector<double> gaussian_kernel(double sigma) {
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * r + 1);
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) {
    k[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[i + r];
  }
  for (double& v : k) v /= sum;
  return k;
}

constexpr std::array<double, 5> kBinomial = {1 / 16.0, 4 / 16.0, 6 / 16.0, 4 / 16.0, 1 / 16.0};

RealImage half(const RealImage& src) {
  const RealImage smooth = convolve(src, kBinomial);
  RealImage out((src.width() + 1) / 2, (src.height() + 1) / 2, 1);
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) out.at(x, y) = smooth.at(2 * x, 2 * y);
  }
  return out;
}

struct Candidate {
  int level;
  int x;
  int y;
  double sub_x;
  double sub_y;
  double response;
};

RealImage harris_response(const RealImage& img, double k) {
  const int w = img.width();
  const int h = img.height();
  RealImage ixx(w, h, 1), iyy(w, h, 1), ixy(w, h, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double gx = 0.5 * (img.at(std::min(x + 1, w - 1), y) - img.at(std::max(x - 1, 0), y));
      const double gy = 0.5 * (img.at(x, std::min(y + 1, h - 1)) - img.at(x, std::max(y - 1, 0)));
      ixx.at(x, y) = gx * gx;
      iyy.at(x, y) = gy * gy;
      ixy.at(x, y) = gx * gy;
    }
  }
  const auto window = gaussian_kernel(1.5);
  const RealImage sxx = convolve(ixx, window);
  const RealImage syy = convolve(iyy, window);
  const RealImage sxy = convolve(ixy, window);
  RealImage r(w, h, 1);
  for (std::size_t i = 0; i < r.data().size(); ++i) {
    const double a = sxx.data()[i];
    const double b = syy.data()[i];
    const double c = sxy.data()[i];
    r.data()[i] = a * b - c * c - k * (a + b) * (a + b);
  }
  return r;
}

double parabolic_offset(double left, double center, double right) {
  const double denom = left - 2.0 * center + right;
  if (denom >= 0.0) return 0.0;
  return std::clamp(0.5 * (left - right) / denom, -0.5, 0.5);
}

double dominant_orientation(const RealImage& img, double x, double y) {
  constexpr int kBins = 36;
  constexpr int kRadius = 6;
  std::array<double, kBins> hist{};
  const int cx = static_cast<int>(std::lround(x));
  const int cy = static_cast<int>(std::lround(y));
  for (int dy = -kRadius; dy <= kRadius; ++dy) {
    for (int dx = -kRadius; dx <= kRadius; ++dx) {
      if (dx * dx + dy * dy > kRadius * kRadius) continue;
      const int px = cx + dx;
      const int py = cy + dy;
      if (px < 1 || py < 1 || px >= img.width() - 1 || py >= img.height() - 1) continue;
      const double gx = 0.5 * (img.at(px + 1, py) - img.at(px - 1, py));
      const double gy = 0.5 * (img.at(px, py + 1) - img.at(px, py - 1));
      const double mag = std::hypot(gx, gy) * std::exp(-(dx * dx + dy * dy) / 18.0);
      double angle = std::atan2(gy, gx);
      if (angle < 0) angle += kTwoPi;
      hist[static_cast<int>(angle / kTwoPi * kBins) % kBins] += mag;
    }
  }
  for (int pass = 0; pass < 2; ++pass) {
    std::array<double, kBins> smoothed{};
    for (int i = 0; i < kBins; ++i) {
      smoothed[i] = (hist[(i + kBins - 1) % kBins] + hist[i] + hist[(i + 1) % kBins]) / 3.0;
    }
    hist = smoothed;
  }
  const int peak = static_cast<int>(std::ranges::max_element(hist) - hist.begin());
  const double off =
      parabolic_offset(hist[(peak + kBins - 1) % kBins], hist[peak], hist[(peak + 1) % kBins]);
  return (peak + 0.5 + off) * kTwoPi / kBins;
}

std::vector<float> describe(const RealImage& img, double x, double y, double angle) {
  constexpr int kCells = 4;
  constexpr int kBins = 8;
  constexpr int kHalf = 8;
  std::array<double, kCells * kCells * kBins> desc{};
  const double ca = std::cos(angle);
  const double sa = std::sin(angle);
  auto at = [&](double u, double v) {
    return sample_bilinear(img, x + ca * u - sa * v, y + sa * u + ca * v);
  };
  for (int iv = 0; iv < 2 * kHalf; ++iv) {
    const double v = iv - kHalf + 0.5;
    for (int iu = 0; iu < 2 * kHalf; ++iu) {
      const double u = iu - kHalf + 0.5;
      const double gu = 0.5 * (at(u + 1, v) - at(u - 1, v));
      const double gv = 0.5 * (at(u, v + 1) - at(u, v - 1));
      const double mag = std::hypot(gu, gv) * std::exp(-(u * u + v * v) / 128.0);
      double theta = std::atan2(gv, gu);
      if (theta < 0) theta += kTwoPi;
      const double fb = theta / kTwoPi * kBins;
      const int b0 = static_cast<int>(fb) % kBins;
      const int b1 = (b0 + 1) % kBins;
      const double t = fb - std::floor(fb);
      const int cell = (iv / kCells) * kCells + iu / kCells;
      desc[cell * kBins + b0] += mag * (1.0 - t);
      desc[cell * kBins + b1] += mag * t;
    }
  }
  auto normalize = [&desc] {
    double n = 0.0;
    for (double v : desc) n += v * v;
    n = std::sqrt(n);
    if (n > 0) {
      for (double& v : desc) v /= n;
    }
  };
  normalize();
  for (double& v : desc) v = std::min(v, 0.2);
  normalize();
  return std::vector<float>(desc.begin(), desc.end());
}

}  // namespace

std::vector<Keypoint> CornerDetector::detect(const RealImage& gray) const {
  std::vector<RealImage> levels;
  levels.push_back(convolve(gray, kBinomial));
  for (int o = 1; o < options_.octaves; ++o) {
    const RealImage& prev = levels.back();
    if (prev.width() < 64 || prev.height() < 64) break;
    levels.push_back(convolve(half(prev), kBinomial));
  }

  std::vector<RealImage> responses;
  double peak = 0.0;
  for (const auto& level : levels) {
    responses.push_back(harris_response(level, options_.harris_k));
    for (double v : responses.back().data()) peak = std::max(peak, v);
  }
  if (!(peak > 0.0)) return {};
  const double threshold = options_.relative_threshold * peak;

  std::vector<Candidate> candidates;
  for (int l = 0; l < static_cast<int>(levels.size()); ++l) {
    const RealImage& r = responses[l];
    const int b = std::max(2, options_.border >> l);
    for (int y = b; y < r.height() - b; ++y) {
      for (int x = b; x < r.width() - b; ++x) {
        const double v = r.at(x, y);
        if (v <= threshold) continue;
        bool is_max = true;
        for (int dy = -2; dy <= 2 && is_max; ++dy) {
          for (int dx = -2; dx <= 2; ++dx) {
            if (dx == 0 && dy == 0) continue;
            const double n = r.at(x + dx, y + dy);
            // Plateaus resolve to the first pixel in raster order.
            const bool before = dy < 0 || (dy == 0 && dx < 0);
            if (n > v || (before && n == v)) {
              is_max = false;
              break;
            }
          }
        }
        if (!is_max) continue;
        const double sx = x + parabolic_offset(r.at(x - 1, y), v, r.at(x + 1, y));
        const double sy = y + parabolic_offset(r.at(x, y - 1), v, r.at(x, y + 1));
        candidates.push_back({l, x, y, sx, sy, v});
      }
    }
  }
  std::ranges::sort(candidates, [](const Candidate& a, const Candidate& b) {
    if (a.response != b.response) return a.response > b.response;
    if (a.level != b.level) return a.level < b.level;
    if (a.y != b.y) return a.y < b.y;
    return a.x < b.x;
  });
  if (static_cast<int>(candidates.size()) > options_.max_keypoints) {
    candidates.resize(static_cast<std::size_t>(options_.max_keypoints));
  }

  std::vector<Keypoint> keypoints;
  keypoints.reserve(candidates.size());
  for (const Candidate& c : candidates) {
    const RealImage& level = levels[c.level];
    const double step = std::ldexp(1.0, c.level);
    Keypoint kp;
    kp.position = {c.sub_x * step, c.sub_y * step};
    kp.scale = step;
    kp.response = c.response;
    kp.orientation = dominant_orientation(level, c.sub_x, c.sub_y);
    kp.descriptor = describe(level, c.sub_x, c.sub_y, kp.orientation);
    keypoints.push_back(std::move(kp));
  }
  return keypoints;
}

std::vector<Keypoint> detect_and_describe(const ImageU8& image) {
  return detect_and_describe(image, CornerDetector());
}

std::vector<Keypoint> detect_and_describe(const ImageU8& image, const FeatureDetector& detector) {
  return detector.detect(to_gray(image));
}

}  // namespace vstitch
