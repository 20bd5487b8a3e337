#include "vstitch/warp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "vstitch/error.hpp"

namespace vstitch {

namespace {

constexpr double kExtentTolerance = 1e-6;
constexpr double kSnapTolerance = 1e-6;
// Pixels no cell claims exactly may still be taken by the nearest cell when
// their inverse lands within this many source pixels of it.
constexpr double kCellSlack = 1.0;

double snap(double v) {
  const double r = std::round(v);
  return std::abs(v - r) < kSnapTolerance ? r : v;
}

bool inside_extent(Extent e, Point2 p) {
  return p.x >= -kExtentTolerance && p.y >= -kExtentTolerance &&
         p.x <= e.width - 1 + kExtentTolerance && p.y <= e.height - 1 + kExtentTolerance;
}

// Inverse mapping through a unit-norm matrix leaves ~1e-13 px of round-off
// on exact integer targets; snapping keeps integer shifts pixel exact.
double snap_source(double v) {
  const double r = std::round(v);
  return std::abs(v - r) < 1e-9 ? r : v;
}

Point2 clamp_to_extent(Extent e, Point2 p) {
  return {std::clamp(snap_source(p.x), 0.0, static_cast<double>(e.width - 1)),
          std::clamp(snap_source(p.y), 0.0, static_cast<double>(e.height - 1))};
}

std::array<Point2, 4> rect_corners(double x0, double y0, double x1, double y1) {
  return {Point2{x0, y0}, Point2{x1, y0}, Point2{x0, y1}, Point2{x1, y1}};
}

struct Bounds {
  double min_x = std::numeric_limits<double>::infinity();
  double min_y = std::numeric_limits<double>::infinity();
  double max_x = -std::numeric_limits<double>::infinity();
  double max_y = -std::numeric_limits<double>::infinity();

  void add(Point2 p) {
    min_x = std::min(min_x, p.x);
    min_y = std::min(min_y, p.y);
    max_x = std::max(max_x, p.x);
    max_y = std::max(max_y, p.y);
  }
};

void add_warped(Bounds& b, const Homography& h, const std::array<Point2, 4>& corners) {
  double sign = 0.0;
  for (const Point2& c : corners) {
    const double d = h.depth(c);
    if (d == 0.0 || (sign != 0.0 && (d > 0.0) != (sign > 0.0))) {
      throw Error(ErrorCode::kCanvasOverflow, "warp maps the image across infinity");
    }
    sign = d;
    b.add(h.apply(c));
  }
}

void add_warp(Bounds& b, Extent extent, const Warp& warp) {
  if (const auto* h = std::get_if<Homography>(&warp)) {
    add_warped(b, *h, rect_corners(0, 0, extent.width - 1, extent.height - 1));
    return;
  }
  const auto& field = std::get<WarpField>(warp);
  for (int r = 0; r < field.rows; ++r) {
    for (int c = 0; c < field.cols; ++c) {
      double x0, y0, x1, y1;
      field.cell_bounds(c, r, x0, y0, x1, y1);
      add_warped(b, field.cell(c, r), rect_corners(x0, y0, x1, y1));
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------

int WarpField::cell_col(double x) const {
  return std::clamp(static_cast<int>(std::floor(x / cell_size)), 0, cols - 1);
}

int WarpField::cell_row(double y) const {
  return std::clamp(static_cast<int>(std::floor(y / cell_size)), 0, rows - 1);
}

const Homography& WarpField::at(Point2 p) const { return cell(cell_col(p.x), cell_row(p.y)); }

void WarpField::cell_bounds(int col, int row, double& x0, double& y0, double& x1,
                            double& y1) const {
  x0 = static_cast<double>(col) * cell_size;
  y0 = static_cast<double>(row) * cell_size;
  x1 = col == cols - 1 ? source.width - 1.0
                       : std::min(static_cast<double>(col + 1) * cell_size, source.width - 1.0);
  y1 = row == rows - 1 ? source.height - 1.0
                       : std::min(static_cast<double>(row + 1) * cell_size, source.height - 1.0);
}

WarpField WarpField::constant(const Homography& h, Extent source) {
  WarpField f;
  f.cols = 1;
  f.rows = 1;
  f.cell_size = std::max(source.width, source.height);
  f.source = source;
  f.cells = {h};
  f.local_cells = {h};
  f.weights = {1.0};
  return f;
}

WarpField build_warp_field(Extent extent, std::span<const Correspondence> inliers,
                           const Homography& global, const WarpFieldOptions& options) {
  options.profile.validate();
  if (options.cell_size < 1 || extent.width < 1 || extent.height < 1) {
    throw Error(ErrorCode::kParameter, "warp field needs a positive cell size and extent");
  }

  WarpField field;
  field.cell_size = options.cell_size;
  field.source = extent;
  field.cols = (extent.width + options.cell_size - 1) / options.cell_size;
  field.rows = (extent.height + options.cell_size - 1) / options.cell_size;
  field.rotation_theta = rotation_angle(global);

  const double ct = std::cos(field.rotation_theta);
  const double st = std::sin(field.rotation_theta);
  auto rotated_u = [&](Point2 p) {
    const Point2 q = global.apply(p);
    return q.x * ct + q.y * st;
  };

  // The warped image is the homeomorphic image of the source rectangle, so
  // the extremes of the linear functional u lie on its boundary.
  double u_lo = std::numeric_limits<double>::infinity();
  double u_hi = -u_lo;
  auto visit = [&](double x, double y) {
    const double u = rotated_u({x, y});
    u_lo = std::min(u_lo, u);
    u_hi = std::max(u_hi, u);
  };
  for (int x = 0; x < extent.width; ++x) {
    visit(x, 0);
    visit(x, extent.height - 1);
  }
  for (int y = 0; y < extent.height; ++y) {
    visit(0, y);
    visit(extent.width - 1, y);
  }

  field.axis_sign = 1.0;
  if (options.orientation == IntegrationOrientation::kTowardInliers && !inliers.empty()) {
    Point2 centroid;
    for (const auto& c : inliers) centroid = centroid + c.src;
    centroid.x /= static_cast<double>(inliers.size());
    centroid.y /= static_cast<double>(inliers.size());
    const double uc = rotated_u(centroid);
    if (uc - u_lo < u_hi - uc) field.axis_sign = -1.0;
  }
  if (field.axis_sign > 0) {
    field.u_min = u_lo;
    field.u_max = u_hi;
  } else {
    field.u_min = -u_hi;
    field.u_max = -u_lo;
  }

  const DltSystem system(inliers);
  const std::size_t count = static_cast<std::size_t>(field.cols) * field.rows;
  field.cells.reserve(count);
  field.local_cells.reserve(count);
  field.weights.reserve(count);
  for (int r = 0; r < field.rows; ++r) {
    for (int c = 0; c < field.cols; ++c) {
      double x0, y0, x1, y1;
      field.cell_bounds(c, r, x0, y0, x1, y1);
      const Point2 center{0.5 * (x0 + x1), 0.5 * (y0 + y1)};
      const double w =
          integration_weight(field.axis_sign * rotated_u(center), field.u_min, field.u_max);
      Homography local = global;
      Homography integrated = global;
      try {
        local = system.solve_local(center, options.profile);
        integrated = integrate_homographies(local, global, w);
      } catch (const Error&) {
        local = global;
        integrated = global;
        ++field.fallback_cells;
      }
      field.local_cells.push_back(local);
      field.cells.push_back(integrated);
      field.weights.push_back(w);
    }
  }
  return field;
}

// ---------------------------------------------------------------------------

CanvasExtent compute_canvas(Extent extent_a, const Warp& warp_a, Extent extent_b,
                            const Warp& warp_b, double max_area) {
  Bounds b;
  add_warp(b, extent_a, warp_a);
  add_warp(b, extent_b, warp_b);
  if (!std::isfinite(b.min_x) || !std::isfinite(b.max_x) || !std::isfinite(b.min_y) ||
      !std::isfinite(b.max_y)) {
    throw Error(ErrorCode::kCanvasOverflow, "canvas bounds are not finite");
  }
  const double x0 = std::floor(snap(b.min_x));
  const double y0 = std::floor(snap(b.min_y));
  const double x1 = std::ceil(snap(b.max_x));
  const double y1 = std::ceil(snap(b.max_y));
  const double width = x1 - x0 + 1.0;
  const double height = y1 - y0 + 1.0;
  if (width * height > max_area) {
    throw Error(ErrorCode::kCanvasOverflow,
                "canvas " + std::to_string(static_cast<long long>(width)) + "x" +
                    std::to_string(static_cast<long long>(height)) + " exceeds the area limit");
  }
  return {{-x0, -y0}, static_cast<int>(width), static_cast<int>(height)};
}

WarpMap build_warp_map(Extent source, const Warp& warp, const CanvasExtent& canvas) {
  WarpMap map;
  map.width = canvas.width;
  map.height = canvas.height;
  map.source = source;
  const std::size_t n = static_cast<std::size_t>(canvas.width) * canvas.height;
  map.src_x.assign(n, 0.0);
  map.src_y.assign(n, 0.0);
  map.mask = Mask(canvas.width, canvas.height, 1, 0);

  if (const auto* h = std::get_if<Homography>(&warp)) {
    const Homography inv = h->inverse();
    for (int y = 0; y < canvas.height; ++y) {
      for (int x = 0; x < canvas.width; ++x) {
        const Point2 p = inv.apply({x - canvas.offset.x, y - canvas.offset.y});
        if (!inside_extent(source, p)) continue;
        const Point2 q = clamp_to_extent(source, p);
        const std::size_t i = static_cast<std::size_t>(y) * canvas.width + x;
        map.src_x[i] = q.x;
        map.src_y[i] = q.y;
        map.mask.at(x, y) = 1;
      }
    }
    return map;
  }

  // Each cell claims the canvas pixels whose inverse lands inside it; cells
  // are visited in row-major order so the lowest index wins ties.
  const auto& field = std::get<WarpField>(warp);
  std::vector<double> slack(n, std::numeric_limits<double>::infinity());
  std::vector<Point2> candidate(n);
  for (int r = 0; r < field.rows; ++r) {
    for (int c = 0; c < field.cols; ++c) {
      const Homography& h = field.cell(c, r);
      const Homography inv = h.inverse();
      double x0, y0, x1, y1;
      field.cell_bounds(c, r, x0, y0, x1, y1);
      const double own_x1 = c == field.cols - 1 ? x1 + kExtentTolerance
                                                : static_cast<double>(c + 1) * field.cell_size;
      const double own_y1 = r == field.rows - 1 ? y1 + kExtentTolerance
                                                : static_cast<double>(r + 1) * field.cell_size;
      const double own_x0 = c == 0 ? -kExtentTolerance : x0;
      const double own_y0 = r == 0 ? -kExtentTolerance : y0;

      Bounds b;
      add_warped(b, h, rect_corners(x0, y0, x1, y1));
      const int cx0 = std::max(0, static_cast<int>(std::floor(b.min_x + canvas.offset.x - kCellSlack)));
      const int cy0 = std::max(0, static_cast<int>(std::floor(b.min_y + canvas.offset.y - kCellSlack)));
      const int cx1 = std::min(canvas.width - 1,
                               static_cast<int>(std::ceil(b.max_x + canvas.offset.x + kCellSlack)));
      const int cy1 = std::min(canvas.height - 1,
                               static_cast<int>(std::ceil(b.max_y + canvas.offset.y + kCellSlack)));
      for (int y = cy0; y <= cy1; ++y) {
        for (int x = cx0; x <= cx1; ++x) {
          if (map.mask.at(x, y)) continue;
          const Point2 p = inv.apply({x - canvas.offset.x, y - canvas.offset.y});
          const std::size_t i = static_cast<std::size_t>(y) * canvas.width + x;
          if (p.x >= own_x0 && p.x < own_x1 && p.y >= own_y0 && p.y < own_y1) {
            const Point2 q = clamp_to_extent(source, p);
            map.src_x[i] = q.x;
            map.src_y[i] = q.y;
            map.mask.at(x, y) = 1;
            continue;
          }
          if (!inside_extent(source, p)) continue;
          const double dx = std::max({x0 - p.x, 0.0, p.x - x1});
          const double dy = std::max({y0 - p.y, 0.0, p.y - y1});
          const double d = std::hypot(dx, dy);
          if (d <= kCellSlack && d < slack[i]) {
            slack[i] = d;
            candidate[i] = clamp_to_extent(source, p);
          }
        }
      }
    }
  }
  for (int y = 0; y < canvas.height; ++y) {
    for (int x = 0; x < canvas.width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * canvas.width + x;
      if (map.mask.at(x, y) || !std::isfinite(slack[i])) continue;
      map.src_x[i] = candidate[i].x;
      map.src_y[i] = candidate[i].y;
      map.mask.at(x, y) = 1;
    }
  }
  return map;
}

WarpedImage warp_image(const ImageU8& image, const WarpMap& map, const PixelRect& rect) {
  if (image.width() != map.source.width || image.height() != map.source.height) {
    throw Error(ErrorCode::kParameter, "image does not match the warp map source extent");
  }
  const int channels = image.channels();
  const int w = image.width();
  const int h = image.height();
  WarpedImage out{RealImage(rect.width(), rect.height(), channels, 0.0), crop(map.mask, rect)};
  for (int y = rect.y0; y <= rect.y1; ++y) {
    double* dst = out.pixels.row(y - rect.y0);
    const std::uint8_t* valid = map.mask.row(y);
    for (int x = rect.x0; x <= rect.x1; ++x) {
      if (!valid[x]) continue;
      const std::size_t i = static_cast<std::size_t>(y) * map.width + x;
      const double sx = map.src_x[i];
      const double sy = map.src_y[i];
      const int x0 = static_cast<int>(sx);
      const int y0 = static_cast<int>(sy);
      const int x1 = std::min(x0 + 1, w - 1);
      const int y1 = std::min(y0 + 1, h - 1);
      const double fx = sx - x0;
      const double fy = sy - y0;
      const std::uint8_t* r0 = image.row(y0);
      const std::uint8_t* r1 = image.row(y1);
      double* d = dst + static_cast<std::size_t>(x - rect.x0) * channels;
      for (int c = 0; c < channels; ++c) {
        const double top = r0[x0 * channels + c] * (1.0 - fx) + r0[x1 * channels + c] * fx;
        const double bottom = r1[x0 * channels + c] * (1.0 - fx) + r1[x1 * channels + c] * fx;
        d[c] = top * (1.0 - fy) + bottom * fy;
      }
    }
  }
  return out;
}

WarpedImage warp_image(const RealImage& image, const WarpMap& map) {
  if (image.width() != map.source.width || image.height() != map.source.height) {
    throw Error(ErrorCode::kParameter, "image does not match the warp map source extent");
  }
  WarpedImage out{RealImage(map.width, map.height, image.channels(), 0.0), map.mask};
  const int channels = image.channels();
  const int w = image.width();
  const int h = image.height();
  for (int y = 0; y < map.height; ++y) {
    double* dst = out.pixels.row(y);
    for (int x = 0; x < map.width; ++x) {
      if (!map.mask.at(x, y)) continue;
      const std::size_t i = static_cast<std::size_t>(y) * map.width + x;
      const double sx = map.src_x[i];
      const double sy = map.src_y[i];
      const int x0 = static_cast<int>(sx);
      const int y0 = static_cast<int>(sy);
      const int x1 = std::min(x0 + 1, w - 1);
      const int y1 = std::min(y0 + 1, h - 1);
      const double fx = sx - x0;
      const double fy = sy - y0;
      const double* r0 = image.row(y0);
      const double* r1 = image.row(y1);
      for (int c = 0; c < channels; ++c) {
        const double top = r0[x0 * channels + c] * (1.0 - fx) + r0[x1 * channels + c] * fx;
        const double bottom = r1[x0 * channels + c] * (1.0 - fx) + r1[x1 * channels + c] * fx;
        dst[x * channels + c] = top * (1.0 - fy) + bottom * fy;
      }
    }
  }
  return out;
}

WarpedImage warp_image(const RealImage& image, const Warp& warp, const CanvasExtent& canvas) {
  return warp_image(image, build_warp_map({image.width(), image.height()}, warp, canvas));
}

}  // namespace vstitch
