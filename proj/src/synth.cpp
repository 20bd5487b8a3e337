#include "vstitch/synth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <random>
#include <sstream>

#include "keyvalue.hpp"
#include "vstitch/error.hpp"

namespace vstitch {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// `mixed` is splitmix(seed), hoisted out of the per-pixel loops.
std::uint64_t hash_cell(std::int64_t i, std::int64_t j, std::uint64_t mixed) {
  return splitmix(splitmix(mixed ^ static_cast<std::uint64_t>(i)) ^ static_cast<std::uint64_t>(j));
}

double unit(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

double smooth(double t) { return t * t * (3.0 - 2.0 * t); }

double value_noise(double x, double y, double period, std::uint64_t mixed) {
  const double fx = x / period;
  const double fy = y / period;
  const auto i = static_cast<std::int64_t>(std::floor(fx));
  const auto j = static_cast<std::int64_t>(std::floor(fy));
  const double tx = smooth(fx - static_cast<double>(i));
  const double ty = smooth(fy - static_cast<double>(j));
  const double v00 = unit(hash_cell(i, j, mixed));
  const double v10 = unit(hash_cell(i + 1, j, mixed));
  const double v01 = unit(hash_cell(i, j + 1, mixed));
  const double v11 = unit(hash_cell(i + 1, j + 1, mixed));
  return (v00 * (1 - tx) + v10 * tx) * (1 - ty) + (v01 * (1 - tx) + v11 * tx) * ty;
}

// Multi-octave value noise under a layer of random axis-aligned blocks.
void texture(double x, double y, std::uint64_t seed, double cell, double base_period, double out[3]) {
  for (int c = 0; c < 3; ++c) {
    const std::uint64_t s = splitmix(seed * 3 + static_cast<std::uint64_t>(c));
    double v = 0.0;
    double amp = 0.5;
    double period = base_period;
    for (int o = 0; o < 4; ++o) {
      v += amp * value_noise(x, y, period, splitmix(s + static_cast<std::uint64_t>(o)));
      amp *= 0.5;
      period *= 0.5;
    }
    out[c] = std::clamp(128.0 + (v / 0.9375 - 0.5) * 400.0, 0.0, 255.0);
  }
  const auto ci = static_cast<std::int64_t>(std::floor(x / cell));
  const auto cj = static_cast<std::int64_t>(std::floor(y / cell));
  const std::uint64_t h = hash_cell(ci, cj, splitmix(splitmix(seed ^ 0xb10cULL)));
  if (unit(h) < 0.35) return;
  const double lx = x - static_cast<double>(ci) * cell;
  const double ly = y - static_cast<double>(cj) * cell;
  const std::uint64_t g = splitmix(h);
  const double x0 = unit(g) * 0.4 * cell;
  const double y0 = unit(splitmix(g + 1)) * 0.4 * cell;
  const double w = (0.3 + 0.3 * unit(splitmix(g + 2))) * cell;
  const double hh = (0.3 + 0.3 * unit(splitmix(g + 3))) * cell;
  if (lx < x0 || lx >= x0 + w || ly < y0 || ly >= y0 + hh) return;
  for (int c = 0; c < 3; ++c) out[c] = 255.0 * unit(splitmix(g + 4 + static_cast<std::uint64_t>(c)));
}

int owning_plane(const SceneSpec& spec, Point2 a) {
  for (std::size_t k = 0; k < spec.planes.size(); ++k) {
    if (a.x >= spec.planes[k].x_min && a.x < spec.planes[k].x_max) return static_cast<int>(k);
  }
  return -1;
}

bool in_object(const SceneSpec& spec, Point2 a, int frame) {
  if (!spec.object) return false;
  const MovingObject& o = *spec.object;
  const double x0 = o.start.x + frame * o.velocity.x;
  const double y0 = o.start.y + frame * o.velocity.y;
  return a.x >= x0 && a.x < x0 + o.size && a.y >= y0 && a.y < y0 + o.size;
}

// Scene color at A position `a`; false when no plane covers it.
bool scene_color(const SceneSpec& spec, Point2 a, int frame, double out[3]) {
  if (in_object(spec, a, frame)) {
    const MovingObject& o = *spec.object;
    texture(a.x - frame * o.velocity.x, a.y - frame * o.velocity.y, o.texture_seed, 8.0, 12.0, out);
    return true;
  }
  const int k = owning_plane(spec, a);
  if (k < 0) return false;
  if (spec.flat_background) {
    out[0] = out[1] = out[2] = 128.0;
    return true;
  }
  texture(a.x - frame * spec.motion.x, a.y - frame * spec.motion.y,
          spec.planes[static_cast<std::size_t>(k)].texture_seed, 24.0, 64.0, out);
  return true;
}

void put(ImageU8& img, int x, int y, const double c[3]) {
  for (int ch = 0; ch < 3; ++ch) {
    img.at(x, y, ch) = static_cast<std::uint8_t>(std::clamp(std::lround(c[ch]), 0L, 255L));
  }
}

// A position seen by B pixel `b`, through the first plane that claims it.
std::optional<Point2> b_to_a(const SceneSpec& spec, const std::vector<Homography>& inverses, Point2 b) {
  const auto und = fisheye_undistort(b, spec.fisheye_focal, image_center(spec.width, spec.height));
  if (!und) return std::nullopt;
  for (std::size_t k = 0; k < spec.planes.size(); ++k) {
    if (inverses[k].depth(*und) <= 0.0) continue;
    const Point2 a = inverses[k].apply(*und);
    if (a.x >= spec.planes[k].x_min && a.x < spec.planes[k].x_max) return a;
  }
  return std::nullopt;
}

bool inside(Point2 p, int w, int h) { return p.x >= 0.0 && p.y >= 0.0 && p.x <= w - 1 && p.y <= h - 1; }

GroundTruth sample_ground_truth(const SceneSpec& spec) {
  GroundTruth truth;
  for (const PlaneSpec& p : spec.planes) truth.plane_homographies.push_back(p.to_b);
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> ux(0.0, spec.width - 1.0);
  std::uniform_real_distribution<double> uy(0.0, spec.height - 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  const int outliers = static_cast<int>(std::lround(spec.outlier_fraction * spec.correspondences));
  const int inliers = spec.correspondences - outliers;
  const long limit = 1000L * std::max(1, spec.correspondences);

  long attempts = 0;
  for (int n = 0; n < inliers && attempts < limit; ++attempts) {
    const Point2 a{ux(rng), uy(rng)};
    const auto b = scene_map(spec, a);
    if (!b) continue;
    Point2 q = *b;
    if (spec.noise_sigma > 0.0) {
      q.x += spec.noise_sigma * noise(rng);
      q.y += spec.noise_sigma * noise(rng);
    }
    if (!inside(q, spec.width, spec.height)) continue;
    truth.correspondences.push_back({{a, q}, true, owning_plane(spec, a)});
    ++n;
  }
  for (int n = 0; n < outliers && attempts < 2 * limit; ++attempts) {
    const Point2 a{ux(rng), uy(rng)};
    const Point2 q{ux(rng), uy(rng)};
    const auto b = scene_map(spec, a);
    if (b && distance(*b, q) < 20.0) continue;
    truth.correspondences.push_back({{a, q}, false, -1});
    ++n;
  }
  std::shuffle(truth.correspondences.begin(), truth.correspondences.end(), rng);
  return truth;
}

}  // namespace

void SceneSpec::validate() const {
  if (planes.empty()) throw Error(ErrorCode::kParameter, "scene needs at least one plane");
  if (!(fisheye_focal > 0.0)) throw Error(ErrorCode::kParameter, "fisheye focal length must be positive");
  if (width < 8 || height < 8) throw Error(ErrorCode::kParameter, "scene frames must be at least 8x8");
  if (!(outlier_fraction >= 0.0 && outlier_fraction <= 1.0)) {
    throw Error(ErrorCode::kParameter, "outlier fraction must lie in [0, 1]");
  }
  if (!(noise_sigma >= 0.0)) throw Error(ErrorCode::kParameter, "noise sigma must be nonnegative");
  if (correspondences < 0) throw Error(ErrorCode::kParameter, "correspondence count must be nonnegative");
  if (object && !(object->size > 0.0)) throw Error(ErrorCode::kParameter, "object size must be positive");
}

CorrespondenceSet GroundTruth::inliers() const {
  CorrespondenceSet out;
  for (const auto& c : correspondences) {
    if (c.inlier) out.push_back(c.pair);
  }
  return out;
}

CorrespondenceSet GroundTruth::all() const {
  CorrespondenceSet out;
  for (const auto& c : correspondences) out.push_back(c.pair);
  return out;
}

Point2 image_center(int width, int height) { return {(width - 1) / 2.0, (height - 1) / 2.0}; }

Point2 fisheye_distort(Point2 pinhole, double focal, Point2 center) {
  const double dx = pinhole.x - center.x;
  const double dy = pinhole.y - center.y;
  const double ru = std::hypot(dx, dy);
  if (ru == 0.0) return center;
  const double s = focal * std::atan(ru / focal) / ru;
  return {center.x + dx * s, center.y + dy * s};
}

std::optional<Point2> fisheye_undistort(Point2 distorted, double focal, Point2 center) {
  const double dx = distorted.x - center.x;
  const double dy = distorted.y - center.y;
  const double rd = std::hypot(dx, dy);
  if (rd == 0.0) return center;
  const double angle = rd / focal;
  if (angle >= 1.5) return std::nullopt;
  const double s = focal * std::tan(angle) / rd;
  return Point2{center.x + dx * s, center.y + dy * s};
}

std::optional<Point2> scene_map(const SceneSpec& spec, Point2 a) {
  const int k = owning_plane(spec, a);
  if (k < 0) return std::nullopt;
  const Homography& h = spec.planes[static_cast<std::size_t>(k)].to_b;
  if (h.depth(a) <= 0.0) return std::nullopt;
  return fisheye_distort(h.apply(a), spec.fisheye_focal, image_center(spec.width, spec.height));
}

GroundTruth ground_truth(const SceneSpec& spec) {
  spec.validate();
  return sample_ground_truth(spec);
}

RenderedPair render_pair(const SceneSpec& spec, int frame_index) {
  spec.validate();
  RenderedPair out{ImageU8(spec.width, spec.height, 3), ImageU8(spec.width, spec.height, 3), sample_ground_truth(spec), {}};
  std::vector<Homography> inverses;
  for (const PlaneSpec& p : spec.planes) inverses.push_back(p.to_b.inverse());
  double c[3];
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      if (scene_color(spec, {double(x), double(y)}, frame_index, c)) put(out.a, x, y, c);
      const auto a = b_to_a(spec, inverses, {double(x), double(y)});
      if (a && scene_color(spec, *a, frame_index, c)) put(out.b, x, y, c);
    }
  }
  if (spec.object) {
    out.object_mask = Mask(spec.width, spec.height, 1, 0);
    for (int y = 0; y < spec.height; ++y) {
      for (int x = 0; x < spec.width; ++x) {
        out.object_mask.at(x, y) = in_object(spec, {double(x), double(y)}, frame_index) ? 1 : 0;
      }
    }
  }
  return out;
}

Sequence make_sequence(const SceneSpec& spec, int frames) {
  if (frames < 1) throw Error(ErrorCode::kParameter, "a sequence needs at least one frame");
  Sequence seq;
  for (int t = 0; t < frames; ++t) {
    RenderedPair p = render_pair(spec, t);
    if (t == 0) seq.truth = std::move(p.truth);
    seq.a.push_back(std::move(p.a));
    seq.b.push_back(std::move(p.b));
    seq.object_masks.push_back(std::move(p.object_mask));
  }
  return seq;
}

Sequence make_sequence(SceneSpec spec, Point2 motion, int frames) {
  spec.motion = motion;
  return make_sequence(spec, frames);
}

SceneSpec planar_scene(std::uint64_t seed) {
  SceneSpec s;
  s.seed = seed;
  const double a = 0.03;
  Eigen::Matrix3d g;
  g << std::cos(a), -std::sin(a), -260.0,  //
      std::sin(a), std::cos(a), 4.0,       //
      -1.2e-4, 0.0, 1.0;
  s.planes.push_back({seed, -1e9, 1e9, Homography(g)});
  return s;
}

SceneSpec two_plane_scene(std::uint64_t seed) {
  SceneSpec s = planar_scene(seed);
  const double split = 420.0;
  // A second plane hinged on x = split: G2 = G1 (I + a l^T), l = (1, 0, -split).
  const Eigen::Vector3d l(1.0, 0.0, -split);
  const Eigen::Vector3d a(0.0, 0.02, 4e-4);
  const Eigen::Matrix3d k = Eigen::Matrix3d::Identity() + a * l.transpose();
  const Eigen::Matrix3d g1 = s.planes.front().to_b.matrix();
  s.planes.front().x_max = split;
  s.planes.push_back({seed, split, 1e9, Homography(g1 * k)});
  return s;
}

SceneSpec parse_scene(std::string_view text, std::string_view origin) {
  SceneSpec s;
  for (const kv::Entry& e : kv::entries(text, origin)) {
    const std::string& key = e.key;
    const std::string& value = e.value;
    const int line = e.line;
    auto one = [&] { return kv::numbers(value, origin, line, 1).front(); };
    auto integer = [&] { return kv::integer(value, origin, line); };
    if (key == "width") {
      s.width = static_cast<int>(integer());
    } else if (key == "height") {
      s.height = static_cast<int>(integer());
    } else if (key == "fisheye_focal") {
      s.fisheye_focal = one();
    } else if (key == "outlier_fraction") {
      s.outlier_fraction = one();
    } else if (key == "noise_sigma") {
      s.noise_sigma = one();
    } else if (key == "correspondences") {
      s.correspondences = static_cast<int>(integer());
    } else if (key == "seed") {
      s.seed = static_cast<std::uint64_t>(integer());
    } else if (key == "flat_background") {
      s.flat_background = integer() != 0.0;
    } else if (key == "motion") {
      const auto v = kv::numbers(value, origin, line, 2);
      s.motion = {v[0], v[1]};
    } else if (key == "plane") {
      const auto v = kv::numbers(value, origin, line, 12);
      Eigen::Matrix3d m;
      m << v[3], v[4], v[5], v[6], v[7], v[8], v[9], v[10], v[11];
      try {
        s.planes.push_back({static_cast<std::uint64_t>(v[0]), v[1], v[2], Homography(m)});
      } catch (const Error& e) {
        kv::fail(origin, line, e.what());
      }
    } else if (key == "object") {
      const auto v = kv::numbers(value, origin, line, 6);
      s.object = MovingObject{v[0], {v[1], v[2]}, {v[3], v[4]}, static_cast<std::uint64_t>(v[5])};
    } else {
      kv::fail(origin, line, "unknown key '" + key + "'");
    }
  }
  try {
    s.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kParse, std::string(origin) + ": " + e.what());
  }
  return s;
}

std::string format_scene(const SceneSpec& s) {
  std::ostringstream out;
  out << "width=" << s.width << "\nheight=" << s.height << "\nfisheye_focal=" << kv::format(s.fisheye_focal)
      << "\noutlier_fraction=" << kv::format(s.outlier_fraction) << "\nnoise_sigma=" << kv::format(s.noise_sigma)
      << "\ncorrespondences=" << s.correspondences << "\nseed=" << s.seed << "\nmotion=" << kv::format(s.motion.x)
      << ' ' << kv::format(s.motion.y) << "\n";
  if (s.flat_background) out << "flat_background=1\n";
  for (const PlaneSpec& p : s.planes) {
    out << "plane=" << p.texture_seed << ' ' << kv::format(p.x_min) << ' ' << kv::format(p.x_max);
    for (int k = 1; k <= 9; ++k) out << ' ' << kv::format(p.to_b.h(k));
    out << "\n";
  }
  if (s.object) {
    const MovingObject& o = *s.object;
    out << "object=" << kv::format(o.size) << ' ' << kv::format(o.start.x) << ' ' << kv::format(o.start.y) << ' '
        << kv::format(o.velocity.x) << ' ' << kv::format(o.velocity.y) << ' ' << o.texture_seed << "\n";
  }
  return out.str();
}

std::string format_truth(const GroundTruth& truth) {
  std::ostringstream out;
  out << "# x1 y1 x2 y2 label plane_id\n";
  for (const auto& c : truth.correspondences) {
    out << kv::format(c.pair.src.x) << ' ' << kv::format(c.pair.src.y) << ' ' << kv::format(c.pair.dst.x) << ' '
        << kv::format(c.pair.dst.y) << ' ' << (c.inlier ? 1 : 0) << ' ' << c.plane << "\n";
  }
  return out.str();
}

GroundTruth parse_truth(std::string_view text, std::string_view origin) {
  GroundTruth truth;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string t = kv::trim(raw);
    if (t.empty() || t.front() == '#') continue;
    const auto v = kv::numbers(t, origin, line, 6);
    if (v[4] != 0.0 && v[4] != 1.0) kv::fail(origin, line, "label must be 0 or 1");
    truth.correspondences.push_back({{{v[0], v[1]}, {v[2], v[3]}}, v[4] == 1.0, static_cast<int>(v[5])});
  }
  return truth;
}

}  // namespace vstitch
