#include "vstitch/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "vstitch/error.hpp"

namespace vstitch {

double squared_distance(Point2 a, Point2 b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

double distance(Point2 a, Point2 b) { return std::sqrt(squared_distance(a, b)); }

// ---------------------------------------------------------------------------

Homography::Homography() : m_(Eigen::Matrix3d::Identity() / std::sqrt(3.0)) {}

Homography::Homography(const Eigen::Matrix3d& m) {
  const double norm = m.norm();
  if (!std::isfinite(norm) || norm == 0.0) {
    throw Error(ErrorCode::kEstimationDegenerate, "homography is zero or non-finite");
  }
  m_ = m / norm;
}

Homography Homography::translation(double dx, double dy) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  m(0, 2) = dx;
  m(1, 2) = dy;
  return Homography(m);
}

Point2 Homography::apply(Point2 p) const {
  const double x = m_(0, 0) * p.x + m_(0, 1) * p.y + m_(0, 2);
  const double y = m_(1, 0) * p.x + m_(1, 1) * p.y + m_(1, 2);
  const double w = m_(2, 0) * p.x + m_(2, 1) * p.y + m_(2, 2);
  return {x / w, y / w};
}

double Homography::depth(Point2 p) const {
  return m_(2, 0) * p.x + m_(2, 1) * p.y + m_(2, 2);
}

bool Homography::invertible(double eps) const {
  return std::abs(m_.determinant()) > eps;
}

Homography Homography::inverse() const {
  if (!invertible()) {
    throw Error(ErrorCode::kEstimationDegenerate, "homography is singular");
  }
  return Homography(m_.inverse());
}

Homography Homography::negated() const {
  Homography out = *this;
  out.m_ = -m_;
  return out;
}

Homography operator*(const Homography& a, const Homography& b) {
  return Homography(a.m_ * b.m_);
}

double projective_distance(const Homography& a, const Homography& b) {
  const double plus = (a.matrix() - b.matrix()).cwiseAbs().maxCoeff();
  const double minus = (a.matrix() + b.matrix()).cwiseAbs().maxCoeff();
  return std::min(plus, minus);
}

double max_transfer_difference(const Homography& a, const Homography& b,
                               std::span<const Point2> points) {
  double worst = 0.0;
  for (const Point2& p : points) {
    worst = std::max(worst, distance(a.apply(p), b.apply(p)));
  }
  return worst;
}

// ---------------------------------------------------------------------------

namespace {

constexpr double kCollinearRatio = 1e-10;
constexpr double kRankRatio = 1e-10;

struct SideNormalization {
  Eigen::Matrix3d transform;
};

SideNormalization normalize_side(std::span<const Correspondence> set, bool source) {
  auto pick = [source](const Correspondence& c) { return source ? c.src : c.dst; };
  double cx = 0.0;
  double cy = 0.0;
  for (const auto& c : set) {
    cx += pick(c).x;
    cy += pick(c).y;
  }
  const double n = static_cast<double>(set.size());
  cx /= n;
  cy /= n;

  double mean_dist = 0.0;
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& c : set) {
    const double dx = pick(c).x - cx;
    const double dy = pick(c).y - cy;
    mean_dist += std::hypot(dx, dy);
    cov(0, 0) += dx * dx;
    cov(0, 1) += dx * dy;
    cov(1, 1) += dy * dy;
  }
  cov(1, 0) = cov(0, 1);
  mean_dist /= n;
  if (!(mean_dist > 0.0) || !std::isfinite(mean_dist)) {
    throw Error(ErrorCode::kEstimationDegenerate, "correspondences are coincident");
  }
  const Eigen::Vector2d eig = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(cov).eigenvalues();
  if (eig(0) <= kCollinearRatio * eig(1)) {
    throw Error(ErrorCode::kEstimationDegenerate, "correspondences are collinear");
  }

  const double s = std::numbers::sqrt2 / mean_dist;
  Eigen::Matrix3d t;
  t << s, 0.0, -s * cx,  //
      0.0, s, -s * cy,   //
      0.0, 0.0, 1.0;
  return {t};
}

Homography nullspace_homography(const Eigen::Matrix<double, Eigen::Dynamic, 9>& a) {
  Eigen::JacobiSVD<Eigen::Matrix<double, Eigen::Dynamic, 9>> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (a.rows() < 8 || !(sv(0) > 0.0) || sv(7) <= kRankRatio * sv(0)) {
    throw Error(ErrorCode::kEstimationDegenerate, "design matrix rank below 8");
  }
  const Eigen::Matrix<double, 9, 1> h = svd.matrixV().col(8);
  Eigen::Matrix3d m;
  m << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  return Homography(m);
}

Homography denormalize(const Homography& normalized, const Homography& src_t,
                       const Homography& dst_t) {
  const Eigen::Matrix3d m =
      dst_t.matrix().inverse() * normalized.matrix() * src_t.matrix();
  Homography out(m);
  if (!out.invertible()) {
    throw Error(ErrorCode::kEstimationDegenerate, "estimated homography is singular");
  }
  return out;
}

}  // namespace

NormalizedCorrespondences normalize_correspondences(std::span<const Correspondence> set) {
  if (set.size() < 4) {
    throw Error(ErrorCode::kInsufficientData,
                "need at least 4 correspondences, got " + std::to_string(set.size()));
  }
  const SideNormalization src = normalize_side(set, true);
  const SideNormalization dst = normalize_side(set, false);
  // Similarities have unit bottom-right entry; keep them unscaled here so the
  // point mapping below is affine.
  NormalizedCorrespondences out{{}, Homography(src.transform), Homography(dst.transform)};
  out.points.reserve(set.size());
  auto map = [](const Eigen::Matrix3d& t, Point2 p) {
    return Point2{t(0, 0) * p.x + t(0, 2), t(1, 1) * p.y + t(1, 2)};
  };
  for (const auto& c : set) {
    out.points.push_back({map(src.transform, c.src), map(dst.transform, c.dst)});
  }
  return out;
}

DesignRows build_design_rows(const Correspondence& c) {
  const double x = c.src.x;
  const double y = c.src.y;
  const double xp = c.dst.x;
  const double yp = c.dst.y;
  DesignRows rows;
  rows << 0.0, 0.0, 0.0, -x, -y, -1.0, yp * x, yp * y, yp,  //
      x, y, 1.0, 0.0, 0.0, 0.0, -xp * x, -xp * y, -xp;
  return rows;
}

Homography estimate_global_homography(std::span<const Correspondence> inliers) {
  return DltSystem(inliers).solve();
}

void WeightProfile::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorCode::kParameter, "weight profile sigma must be positive");
  }
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw Error(ErrorCode::kParameter, "weight profile gamma must lie in [0, 1]");
  }
}

double moving_dlt_weight(Point2 p_star, Point2 p_i, const WeightProfile& profile) {
  const double w = std::exp(-squared_distance(p_star, p_i) / (profile.sigma * profile.sigma));
  return std::max(w, profile.gamma);
}

Homography estimate_local_homography(std::span<const Correspondence> inliers,
                                     Point2 p_star, const WeightProfile& profile) {
  return DltSystem(inliers).solve_local(p_star, profile);
}

DltSystem::DltSystem(std::span<const Correspondence> inliers)
    : points_(inliers.begin(), inliers.end()) {
  NormalizedCorrespondences norm = normalize_correspondences(inliers);
  src_transform_ = norm.src_transform;
  dst_transform_ = norm.dst_transform;
  design_.resize(static_cast<Eigen::Index>(2 * norm.points.size()), 9);
  for (std::size_t i = 0; i < norm.points.size(); ++i) {
    design_.middleRows<2>(static_cast<Eigen::Index>(2 * i)) = build_design_rows(norm.points[i]);
  }
}

Homography DltSystem::solve() const {
  return denormalize(nullspace_homography(design_), src_transform_, dst_transform_);
}

Homography DltSystem::solve_weighted(std::span<const double> weights) const {
  if (weights.size() != points_.size()) {
    throw Error(ErrorCode::kParameter, "one weight per correspondence required");
  }
  const double peak = *std::ranges::max_element(weights);
  if (!(peak > 0.0)) {
    throw Error(ErrorCode::kEstimationDegenerate, "all Moving DLT weights are zero");
  }
  Eigen::Matrix<double, Eigen::Dynamic, 9> weighted = design_;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    weighted.middleRows<2>(static_cast<Eigen::Index>(2 * i)) *= weights[i] / peak;
  }
  return denormalize(nullspace_homography(weighted), src_transform_, dst_transform_);
}

Homography DltSystem::solve_local(Point2 p_star, const WeightProfile& profile) const {
  profile.validate();
  std::vector<double> weights(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i) {
    weights[i] = moving_dlt_weight(p_star, points_[i].src, profile);
  }
  return solve_weighted(weights);
}

// ---------------------------------------------------------------------------

double integration_weight(double u, double u_min, double u_max) {
  if (!(u_max > u_min)) {
    throw Error(ErrorCode::kDegenerateAxis, "integration axis has zero extent");
  }
  return std::clamp((u - u_min) / (u_max - u_min), 0.0, 1.0);
}

Homography integrate_homographies(const Homography& local, const Homography& global,
                                  double w) {
  if (!(w >= 0.0 && w <= 1.0)) {
    throw Error(ErrorCode::kParameter, "integration weight must lie in [0, 1]");
  }
  Eigen::Index r = 0;
  Eigen::Index c = 0;
  global.matrix().cwiseAbs().maxCoeff(&r, &c);
  const bool flip = (local(r, c) < 0.0) != (global(r, c) < 0.0);
  const Eigen::Matrix3d l = flip ? Eigen::Matrix3d(-local.matrix()) : local.matrix();
  const Eigen::Matrix3d blended = w * l + (1.0 - w) * global.matrix();
  if (blended.norm() == 0.0) {
    throw Error(ErrorCode::kDegenerateBlend, "blended homography vanished");
  }
  Homography out(blended);
  if (!out.invertible()) {
    throw Error(ErrorCode::kDegenerateBlend, "blended homography is singular");
  }
  return out;
}

double rotation_angle(const Homography& global) {
  const double h7 = global.h(7);
  const double h8 = global.h(8);
  if (h7 == 0.0 && h8 == 0.0) return 0.0;
  double theta = std::atan2(h8, h7);
  if (theta > std::numbers::pi / 2) theta -= std::numbers::pi;
  if (theta <= -std::numbers::pi / 2) theta += std::numbers::pi;
  return theta;
}

Homography compensation_transform(const Homography& integrated, const Homography& local) {
  return integrated * local.inverse();
}

}  // namespace vstitch
