#include "vstitch/seam.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <utility>

#include "vstitch/error.hpp"

namespace vstitch {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Pixel anchor_in_row(const Mask& mask, const PixelRect& b, int y) {
  double sum = 0.0;
  int count = 0;
  for (int x = b.x0; x <= b.x1; ++x) {
    if (mask.at(x, y)) {
      sum += x;
      ++count;
    }
  }
  const double centroid = sum / count;
  Pixel best{-1, y};
  double best_d = kInf;
  for (int x = b.x0; x <= b.x1; ++x) {
    if (!mask.at(x, y)) continue;
    const double d = std::abs(x - centroid);
    if (d < best_d) {
      best_d = d;
      best.x = x;
    }
  }
  return best;
}

// Per row, the [min, max] columns of seam pixels; rows without pixels are
// filled from the nearest row that has them (ties toward the upper row).
struct RowSpans {
  int y0 = 0;
  std::vector<std::pair<int, int>> spans;

  static RowSpans of(const Seam& seam) {
    RowSpans r;
    if (seam.path.empty()) return r;
    int lo = seam.path.front().y;
    int hi = lo;
    for (const Pixel& p : seam.path) {
      lo = std::min(lo, p.y);
      hi = std::max(hi, p.y);
    }
    r.y0 = lo;
    r.spans.assign(static_cast<std::size_t>(hi - lo + 1),
                   {std::numeric_limits<int>::max(), std::numeric_limits<int>::min()});
    for (const Pixel& p : seam.path) {
      auto& s = r.spans[static_cast<std::size_t>(p.y - lo)];
      s.first = std::min(s.first, p.x);
      s.second = std::max(s.second, p.x);
    }
    // Gaps cannot occur for valid seams; fill defensively from neighbours.
    for (std::size_t i = 1; i < r.spans.size(); ++i) {
      if (r.spans[i].first > r.spans[i].second) r.spans[i] = r.spans[i - 1];
    }
    return r;
  }

  double distance(int x, int y) const {
    if (spans.empty()) return 0.0;
    const int idx = std::clamp(y - y0, 0, static_cast<int>(spans.size()) - 1);
    const auto [lo, hi] = spans[static_cast<std::size_t>(idx)];
    if (x < lo) return lo - x;
    if (x > hi) return x - hi;
    return 0.0;
  }
};

Seam backtrack(const CumulativeField& field, const OverlapRegion& region) {
  const Pixel b = region.bottom_anchor;
  if (!std::isfinite(field.at(b.x, b.y))) {
    throw Error(ErrorCode::kNoPath, "seam endpoints are not connected on the overlap");
  }
  Seam seam;
  Pixel p = b;
  const std::size_t limit = static_cast<std::size_t>(field.bounds.width()) * field.bounds.height();
  while (true) {
    seam.path.push_back(p);
    const SeamStep s = field.step(p.x, p.y);
    if (s == SeamStep::kStart) break;
    switch (s) {
      case SeamStep::kUp: p = {p.x, p.y - 1}; break;
      case SeamStep::kUpLeft: p = {p.x - 1, p.y - 1}; break;
      case SeamStep::kUpRight: p = {p.x + 1, p.y - 1}; break;
      case SeamStep::kLeft: p = {p.x - 1, p.y}; break;
      case SeamStep::kRight: p = {p.x + 1, p.y}; break;
      default: throw Error(ErrorCode::kNoPath, "broken seam backpointer chain");
    }
    if (seam.path.size() > limit) throw Error(ErrorCode::kNoPath, "seam backpointers cycle");
  }
  std::ranges::reverse(seam.path);
  return seam;
}

CostField with_added(const CostField& cost, const RealImage& extra) {
  CostField out = cost;
  for (std::size_t i = 0; i < out.e.data().size(); ++i) {
    if (std::isfinite(out.e.data()[i])) out.e.data()[i] += extra.data()[i];
  }
  return out;
}

}  // namespace

OverlapRegion compute_overlap(const Mask& mask_a, const Mask& mask_b) {
  if (mask_a.width() != mask_b.width() || mask_a.height() != mask_b.height()) {
    throw Error(ErrorCode::kParameter, "overlap masks must share a canvas");
  }
  OverlapRegion region;
  region.mask = Mask(mask_a.width(), mask_a.height(), 1, 0);
  PixelRect b{mask_a.width(), mask_a.height(), -1, -1};
  for (int y = 0; y < mask_a.height(); ++y) {
    for (int x = 0; x < mask_a.width(); ++x) {
      if (mask_a.at(x, y) && mask_b.at(x, y)) {
        region.mask.at(x, y) = 1;
        b.x0 = std::min(b.x0, x);
        b.y0 = std::min(b.y0, y);
        b.x1 = std::max(b.x1, x);
        b.y1 = std::max(b.y1, y);
      }
    }
  }
  if (b.x1 < b.x0) throw Error(ErrorCode::kNoOverlap, "warped images do not overlap");
  region.bounds = b;
  region.top_anchor = anchor_in_row(region.mask, b, b.y0);
  region.bottom_anchor = anchor_in_row(region.mask, b, b.y1);
  return region;
}

OverlapRegion compute_overlap(const WarpedImage& a, const WarpedImage& b) {
  return compute_overlap(a.mask, b.mask);
}

CostField compute_gradient_cost(const OverlapRegion& region, const RealImage& source,
                                const RealImage& target) {
  const PixelRect& b = region.bounds;
  const int w = b.width();
  const int h = b.height();
  CostField out{b, RealImage(w, h, 1, kInf), RealImage(w, h, 1, 0.0), RealImage(w, h, 1, 0.0)};

  const bool local = source.width() == w && source.height() == h;
  const int ox = local ? 0 : b.x0;
  const int oy = local ? 0 : b.y0;
  if (target.width() != source.width() || target.height() != source.height()) {
    throw Error(ErrorCode::kParameter, "cost images differ in size");
  }
  RealImage sum(w, h, 1, 0.0);
  RealImage diff(w, h, 1, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double s = source.at(x + ox, y + oy);
      const double t = target.at(x + ox, y + oy);
      sum.at(x, y) = s + t;
      diff.at(x, y) = s - t;
    }
  }
  auto on = [&](int x, int y) { return x >= 0 && y >= 0 && x < w && y < h && region.mask.at(x + b.x0, y + b.y0); };
  // Central differences, one-sided where a neighbour is off the mask.
  auto grad = [&](const RealImage& f, int x, int y) {
    auto axis = [&](int dx, int dy) {
      const bool fwd = on(x + dx, y + dy);
      const bool bwd = on(x - dx, y - dy);
      if (fwd && bwd) return 0.5 * (f.at(x + dx, y + dy) - f.at(x - dx, y - dy));
      if (fwd) return f.at(x + dx, y + dy) - f.at(x, y);
      if (bwd) return f.at(x, y) - f.at(x - dx, y - dy);
      return 0.0;
    };
    const double gx = axis(1, 0);
    const double gy = axis(0, 1);
    return std::sqrt(gx * gx + gy * gy);
  };

  double sum_m = 0.0;
  double sum_d = 0.0;
  std::size_t count = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!on(x, y)) continue;
      out.smoothness.at(x, y) = grad(sum, x, y);
      out.similarity.at(x, y) = grad(diff, x, y);
      sum_m += out.smoothness.at(x, y);
      sum_d += out.similarity.at(x, y);
      ++count;
    }
  }
  const double mean_m = sum_m / static_cast<double>(count);
  const double mean_d = sum_d / static_cast<double>(count);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!on(x, y)) continue;
      double& sm = out.smoothness.at(x, y);
      double& sd = out.similarity.at(x, y);
      sm = mean_m > 0.0 ? sm / mean_m : 0.0;
      sd = mean_d > 0.0 ? sd / mean_d : 0.0;
      out.e.at(x, y) = sm + sd;
    }
  }
  return out;
}

CumulativeField accumulate_cost(const CostField& cost, const OverlapRegion& region) {
  const PixelRect& b = cost.bounds;
  const int w = b.width();
  const int h = b.height();
  CumulativeField f{b, RealImage(w, h, 1, kInf), Raster<SeamStep>(w, h, 1, SeamStep::kNone)};
  const Pixel a = region.top_anchor;

  auto relax_row = [&](int y) {
    double* c = f.cost.row(y);
    const double* e = cost.e.row(y);
    for (int x = 1; x < w; ++x) {
      if (!std::isfinite(e[x])) continue;
      const double via = c[x - 1] + e[x];
      if (via < c[x]) {
        c[x] = via;
        f.steps.at(x, y) = SeamStep::kLeft;
      }
    }
    for (int x = w - 2; x >= 0; --x) {
      if (!std::isfinite(e[x])) continue;
      const double via = c[x + 1] + e[x];
      if (via < c[x]) {
        c[x] = via;
        f.steps.at(x, y) = SeamStep::kRight;
      }
    }
  };

  const int ax = a.x - b.x0;
  const int ay = a.y - b.y0;
  f.cost.at(ax, ay) = cost.e.at(ax, ay);
  f.steps.at(ax, ay) = SeamStep::kStart;
  relax_row(ay);

  for (int y = ay + 1; y < h; ++y) {
    const double* prev = f.cost.row(y - 1);
    const double* e = cost.e.row(y);
    double* c = f.cost.row(y);
    for (int x = 0; x < w; ++x) {
      if (!std::isfinite(e[x])) continue;
      // Ties go to the smaller column; the strict relaxation below keeps a
      // vertical step over an equal horizontal one.
      double best = x > 0 ? prev[x - 1] : kInf;
      SeamStep step = SeamStep::kUpLeft;
      if (prev[x] < best) {
        best = prev[x];
        step = SeamStep::kUp;
      }
      if (x + 1 < w && prev[x + 1] < best) {
        best = prev[x + 1];
        step = SeamStep::kUpRight;
      }
      if (std::isfinite(best)) {
        c[x] = e[x] + best;
        f.steps.at(x, y) = step;
      }
    }
    relax_row(y);
  }
  return f;
}

Seam find_seam(const CostField& cost, const OverlapRegion& region) {
  return backtrack(accumulate_cost(cost, region), region);
}

PenaltyField build_penalty(const Seam& previous, const OverlapRegion& region, double lambda) {
  const PixelRect& b = region.bounds;
  PenaltyField out{b, RealImage(b.width(), b.height(), 1, 0.0), lambda};
  if (lambda == 0.0 || previous.path.empty()) return out;
  const RowSpans spans = RowSpans::of(previous);
  for (int y = b.y0; y <= b.y1; ++y) {
    for (int x = b.x0; x <= b.x1; ++x) {
      if (!region.mask.at(x, y)) continue;
      out.d.at(x - b.x0, y - b.y0) = lambda * spans.distance(x, y);
    }
  }
  return out;
}

Seam update_seam(const CostField& cost, const PenaltyField& penalty, const OverlapRegion& region,
                 SeamUpdateMode mode) {
  if (penalty.bounds.x0 != cost.bounds.x0 || penalty.bounds.y0 != cost.bounds.y0 ||
      penalty.bounds.x1 != cost.bounds.x1 || penalty.bounds.y1 != cost.bounds.y1) {
    throw Error(ErrorCode::kParameter, "penalty and cost fields cover different regions");
  }
  if (mode == SeamUpdateMode::kPerPixel) {
    return find_seam(with_added(cost, penalty.d), region);
  }
  const CumulativeField c = accumulate_cost(cost, region);
  CostField combined = cost;
  for (std::size_t i = 0; i < combined.e.data().size(); ++i) {
    const double v = c.cost.data()[i];
    combined.e.data()[i] = std::isfinite(cost.e.data()[i])
                               ? (std::isfinite(v) ? v : 0.0) + penalty.d.data()[i]
                               : kInf;
  }
  return find_seam(combined, region);
}

double default_lambda(const CostField& cost, const OverlapRegion& region) {
  double sum = 0.0;
  std::size_t n = 0;
  for (double v : cost.e.data()) {
    if (std::isfinite(v)) {
      sum += v;
      ++n;
    }
  }
  if (n == 0) return 0.0;
  return sum / static_cast<double>(n) / region.bounds.width();
}

double seam_cost(const CostField& cost, const Seam& seam) {
  double total = 0.0;
  for (const Pixel& p : seam.path) total += cost.at(p.x, p.y);
  return total;
}

double seam_displacement(const Seam& previous, const Seam& current) {
  if (current.path.empty() || previous.path.empty()) return 0.0;
  const RowSpans spans = RowSpans::of(previous);
  double total = 0.0;
  for (const Pixel& p : current.path) total += spans.distance(p.x, p.y);
  return total;
}

bool is_valid_seam(const Seam& seam, const OverlapRegion& region) {
  if (seam.path.empty()) return false;
  if (seam.path.front() != region.top_anchor || seam.path.back() != region.bottom_anchor) return false;
  std::set<std::pair<int, int>> seen;
  for (std::size_t i = 0; i < seam.path.size(); ++i) {
    const Pixel p = seam.path[i];
    if (!region.on_mask(p.x, p.y)) return false;
    if (!seen.insert({p.x, p.y}).second) return false;
    if (i == 0) continue;
    const Pixel q = seam.path[i - 1];
    const int dx = p.x - q.x;
    const int dy = p.y - q.y;
    const bool down = dy == 1 && std::abs(dx) <= 1;
    const bool side = dy == 0 && std::abs(dx) == 1;
    if (!down && !side) return false;
  }
  return true;
}

}  // namespace vstitch
