#pragma once

#include "tmc/geometry.hpp"

#include <array>
#include <span>
#include <vector>

namespace tmc::calib {

/// Pinhole intrinsics with Brown-Conrady distortion (OpenCV coefficient order).
/// Default-constructed intrinsics are the identity camera.
struct Intrinsics {
  double fx = 1.0, fy = 1.0;
  double cx = 0.0, cy = 0.0;
  double k1 = 0.0, k2 = 0.0, k3 = 0.0;
  double p1 = 0.0, p2 = 0.0;

  void validate() const;
  bool has_distortion() const { return k1 != 0 || k2 != 0 || k3 != 0 || p1 != 0 || p2 != 0; }
};

struct UndistortOptions {
  int max_iterations = 20;
  double tolerance = 1e-8;  // normalized image units
};

/// Maps an ideal pixel to its distorted location.
Vec2 distort_point(const Vec2& p, const Intrinsics& intr);

/// Inverts distort_point by Newton iteration seeded at the distorted point.
/// Throws Errc::non_convergence when the step has not dropped below the
/// tolerance after max_iterations, typically because the point lies beyond
/// the fold of a strongly barrel-distorted model and has no preimage.
Vec2 undistort_point(const Vec2& p, const Intrinsics& intr, const UndistortOptions& opts = {});

struct PointCorrespondence {
  Vec2 camera_pt;  // undistorted camera px
  Vec2 ortho_pt;   // orthophoto px
};

/// Camera-to-orthophoto projective map. The stored matrix always has unit
/// Frobenius norm and a non-negative (2,2) entry, which makes equality and
/// serialization deterministic.
class Homography {
 public:
  explicit Homography(const Mat3& m, double scale_m_per_px = 1.0);

  static Homography identity(double scale_m_per_px = 1.0) {
    return Homography(Mat3::Identity(), scale_m_per_px);
  }
  static Homography from_row_major(std::span<const double> h, double scale_m_per_px);

  const Mat3& matrix() const { return h_; }
  double scale_m_per_px() const { return scale_; }
  std::array<double, 9> row_major() const;

  /// Orthophoto-to-camera map sharing the same ground resolution.
  Homography inverse() const;

 private:
  Mat3 h_;
  double scale_;
};

/// Throws Errc::horizon when the point lands on the line at infinity.
Vec2 apply_homography(const Homography& h, const Vec2& p);
Vec2 apply_projective(const Mat3& m, const Vec2& p);

/// Normalized DLT: both point sets are Hartley-normalized (centroid at origin,
/// mean distance sqrt(2)) and the null vector of the stacked constraint matrix
/// is taken from the SVD. No outlier rejection is attempted.
Homography estimate_homography(std::span<const PointCorrespondence> corrs,
                               double scale_m_per_px = 1.0);

struct ReprojectionStats {
  double mean_err_camera = 0.0;
  double mean_err_ortho = 0.0;
  std::vector<double> per_point_err_camera;
  std::vector<double> per_point_err_ortho;
};

/// Ortho error is |H c - o|, camera error is |H^-1 o - c|, both in px.
ReprojectionStats reprojection_stats(const Homography& h, std::span<const PointCorrespondence> corrs);

struct BoundingBox {
  double x_min, y_min, x_max, y_max;

  void validate() const;
  Vec2 bottom_midpoint() const { return {(x_min + x_max) / 2.0, y_max}; }
};

/// Undistorts p, maps it to the orthophoto and scales to metres.
Vec2 back_project_point(const Vec2& p, const Intrinsics& intr, const Homography& h);

/// Back-projects the midpoint of the bounding box's bottom edge.
Vec2 back_project_detection(const BoundingBox& bbox, const Intrinsics& intr, const Homography& h);

}  // namespace tmc::calib
