#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vstitch/geometry.hpp"
#include "vstitch/image.hpp"

namespace vstitch {

// A planar patch of the scene, seen by camera A over x_min <= x < x_max and
// mapped into the undistorted view of camera B by `to_b`.
struct PlaneSpec {
  std::uint64_t texture_seed = 1;
  double x_min = -1e9;
  double x_max = 1e9;
  Homography to_b;
};

// Textured square painted over the planes, moving in A coordinates.
struct MovingObject {
  double size = 60.0;
  Point2 start;
  Point2 velocity;
  std::uint64_t texture_seed = 99;
};

struct SceneSpec {
  int width = 640;
  int height = 480;
  std::vector<PlaneSpec> planes;
  double fisheye_focal = 600.0;
  double outlier_fraction = 0.0;
  double noise_sigma = 0.0;
  int correspondences = 300;
  std::uint64_t seed = 1;
  // Per-frame content translation.
  Point2 motion;
  std::optional<MovingObject> object;
  // Uniform gray planes; only the object carries texture.
  bool flat_background = false;

  void validate() const;
};

struct LabeledCorrespondence {
  Correspondence pair;
  bool inlier = true;
  int plane = -1;
};

struct GroundTruth {
  std::vector<LabeledCorrespondence> correspondences;
  std::vector<Homography> plane_homographies;

  CorrespondenceSet inliers() const;
  CorrespondenceSet all() const;
};

struct RenderedPair {
  ImageU8 a;
  ImageU8 b;
  GroundTruth truth;
  // Object footprint in A coordinates; empty when the scene has none.
  Mask object_mask;
};

struct Sequence {
  std::vector<ImageU8> a;
  std::vector<ImageU8> b;
  std::vector<Mask> object_masks;
  GroundTruth truth;
};

// Equidistant fisheye about `center`: r_d = f * atan(r_u / f).
Point2 fisheye_distort(Point2 pinhole, double focal, Point2 center);
// Inverse of fisheye_distort; nullopt beyond the 90 degree field.
std::optional<Point2> fisheye_undistort(Point2 distorted, double focal, Point2 center);
Point2 image_center(int width, int height);

// Maps an A pixel to B through the owning plane and the fisheye; nullopt
// when no plane claims it.
std::optional<Point2> scene_map(const SceneSpec& spec, Point2 a);

RenderedPair render_pair(const SceneSpec& spec, int frame_index = 0);
// The correspondences render_pair would return, without drawing the frames.
GroundTruth ground_truth(const SceneSpec& spec);
Sequence make_sequence(const SceneSpec& spec, int frames);
Sequence make_sequence(SceneSpec spec, Point2 motion, int frames);

// One plane seen through a shifted, slightly rotated camera.
SceneSpec planar_scene(std::uint64_t seed = 1);
// Two planes meeting along a vertical line of A.
SceneSpec two_plane_scene(std::uint64_t seed = 1);

// Flat key=value text; repeatable `plane` lines. Throws kParse naming
// `origin` and the offending line.
SceneSpec parse_scene(std::string_view text, std::string_view origin = "scene");
std::string format_scene(const SceneSpec& spec);

// Lines "x1 y1 x2 y2 label plane_id".
std::string format_truth(const GroundTruth& truth);
GroundTruth parse_truth(std::string_view text, std::string_view origin = "truth");

}  // namespace vstitch
