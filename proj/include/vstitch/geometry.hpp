#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

namespace vstitch {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
double distance(Point2 a, Point2 b);
double squared_distance(Point2 a, Point2 b);

// src lies in the wide-angle image, dst in the fisheye image.
struct Correspondence {
  Point2 src;
  Point2 dst;

  friend bool operator==(const Correspondence&, const Correspondence&) = default;
};

using CorrespondenceSet = std::vector<Correspondence>;

// 3x3 projective transform kept at unit Frobenius norm. Entries h1..h9 are
// the row-major elements.
class Homography {
 public:
  static constexpr double kDeterminantEpsilon = 1e-15;

  Homography();
  // Throws kEstimationDegenerate on a zero or non-finite matrix.
  explicit Homography(const Eigen::Matrix3d& m);

  static Homography translation(double dx, double dy);

  const Eigen::Matrix3d& matrix() const noexcept { return m_; }
  double operator()(int r, int c) const noexcept { return m_(r, c); }
  // 1-based access matching h1..h9.
  double h(int k) const noexcept { return m_((k - 1) / 3, (k - 1) % 3); }

  Point2 apply(Point2 p) const;
  // Homogeneous third coordinate of H * (x, y, 1).
  double depth(Point2 p) const;

  bool invertible(double eps = kDeterminantEpsilon) const;
  // Throws kEstimationDegenerate when not invertible.
  Homography inverse() const;

  Homography negated() const;

  friend Homography operator*(const Homography& a, const Homography& b);

 private:
  Eigen::Matrix3d m_;
};

// Projective equality: max entry difference after aligning scale and sign.
double projective_distance(const Homography& a, const Homography& b);

// Largest |a(p) - b(p)| over the given points.
double max_transfer_difference(const Homography& a, const Homography& b,
                               std::span<const Point2> points);

// ---------------------------------------------------------------------------
// Direct linear transform.

struct NormalizedCorrespondences {
  CorrespondenceSet points;
  // Similarity transforms taking original coordinates to normalized ones.
  Homography src_transform;
  Homography dst_transform;
};

// Isotropic conditioning: each side shifted to zero centroid and scaled to
// mean distance sqrt(2). Throws kInsufficientData below 4 points and
// kEstimationDegenerate when either side is coincident or collinear.
NormalizedCorrespondences normalize_correspondences(
    std::span<const Correspondence> set);

using DesignRows = Eigen::Matrix<double, 2, 9>;

// First two rows of the cross-product linearization p' x (H p) = 0.
DesignRows build_design_rows(const Correspondence& c);

// Unit-norm minimizer of |A h|^2 over all correspondences.
Homography estimate_global_homography(std::span<const Correspondence> inliers);

struct WeightProfile {
  double sigma = 1.0;
  double gamma = 0.01;

  // Throws kParameter unless sigma > 0 and gamma in [0, 1].
  void validate() const;
};

// max(exp(-|p* - p_i|^2 / sigma^2), gamma)
double moving_dlt_weight(Point2 p_star, Point2 p_i, const WeightProfile& profile);

Homography estimate_local_homography(std::span<const Correspondence> inliers,
                                     Point2 p_star, const WeightProfile& profile);

// Normalized, stacked design matrix for a fixed inlier set, reusable across
// many weighted solves.
class DltSystem {
 public:
  explicit DltSystem(std::span<const Correspondence> inliers);

  std::size_t size() const noexcept { return points_.size(); }
  std::span<const Correspondence> points() const noexcept { return points_; }

  Homography solve() const;
  // One weight per correspondence.
  Homography solve_weighted(std::span<const double> weights) const;
  Homography solve_local(Point2 p_star, const WeightProfile& profile) const;

 private:
  CorrespondenceSet points_;
  Eigen::Matrix<double, Eigen::Dynamic, 9> design_;
  Homography src_transform_;
  Homography dst_transform_;
};

// (u - u_min) / (u_max - u_min) clamped to [0, 1].
double integration_weight(double u, double u_min, double u_max);

// w * H_l + (1 - w) * H_g on unit-norm, sign-aligned representatives.
Homography integrate_homographies(const Homography& local,
                                  const Homography& global, double w);

// atan(h8 / h7) on (-pi/2, pi/2]; 0 when h7 = h8 = 0.
double rotation_angle(const Homography& global);

// R = H * H_l^-1.
Homography compensation_transform(const Homography& integrated,
                                  const Homography& local);

}  // namespace vstitch
