#include "tmc/geom_calib.hpp"

#include "tmc/error.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <numeric>
#include <sstream>

namespace tmc::calib {

namespace {

bool all_finite(std::initializer_list<double> xs) {
  for (double x : xs)
    if (!std::isfinite(x)) return false;
  return true;
}

// Similarity taking the centroid to the origin with mean distance sqrt(2).
Mat3 hartley_transform(const std::vector<Vec2>& pts) {
  Vec2 centroid = Vec2::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  double mean_dist = 0.0;
  for (const auto& p : pts) mean_dist += (p - centroid).norm();
  mean_dist /= static_cast<double>(pts.size());
  if (mean_dist <= 0.0)
    throw Error(Errc::degenerate_configuration, "all correspondence points coincide");
  const double s = std::sqrt(2.0) / mean_dist;
  Mat3 t;
  t << s, 0, -s * centroid.x(), 0, s, -s * centroid.y(), 0, 0, 1;
  return t;
}

bool any_three_collinear(const std::vector<Vec2>& pts) {
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      for (std::size_t k = j + 1; k < pts.size(); ++k)
        if (std::abs(cross2(pts[j] - pts[i], pts[k] - pts[i])) < 1e-9) return true;
  return false;
}

}  // namespace

void Intrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0))
    throw Error(Errc::invalid_argument, "intrinsics focal lengths must be positive");
  if (!all_finite({fx, fy, cx, cy, k1, k2, k3, p1, p2}))
    throw Error(Errc::invalid_argument, "intrinsics contain non-finite values");
}

Vec2 distort_point(const Vec2& p, const Intrinsics& intr) {
  const double x = (p.x() - intr.cx) / intr.fx;
  const double y = (p.y() - intr.cy) / intr.fy;
  const double r2 = x * x + y * y;
  const double radial = 1.0 + r2 * (intr.k1 + r2 * (intr.k2 + r2 * intr.k3));
  const double xd = x * radial + 2.0 * intr.p1 * x * y + intr.p2 * (r2 + 2.0 * x * x);
  const double yd = y * radial + intr.p1 * (r2 + 2.0 * y * y) + 2.0 * intr.p2 * x * y;
  return {xd * intr.fx + intr.cx, yd * intr.fy + intr.cy};
}

Vec2 undistort_point(const Vec2& p, const Intrinsics& intr, const UndistortOptions& opts) {
  if (!is_finite(p)) throw Error(Errc::invalid_argument, "undistort_point: non-finite input");
  if (!intr.has_distortion()) return p;
  const double xd = (p.x() - intr.cx) / intr.fx;
  const double yd = (p.y() - intr.cy) / intr.fy;
  // Newton on the forward model, started at the distorted point.
  double x = xd, y = yd;
  for (int it = 0; it < opts.max_iterations; ++it) {
    const double r2 = x * x + y * y;
    const double radial = 1.0 + r2 * (intr.k1 + r2 * (intr.k2 + r2 * intr.k3));
    const double dradial = intr.k1 + r2 * (2.0 * intr.k2 + 3.0 * r2 * intr.k3);
    const double fx = x * radial + 2.0 * intr.p1 * x * y + intr.p2 * (r2 + 2.0 * x * x) - xd;
    const double fy = y * radial + intr.p1 * (r2 + 2.0 * y * y) + 2.0 * intr.p2 * x * y - yd;
    const double jxx = radial + 2.0 * x * x * dradial + 2.0 * intr.p1 * y + 6.0 * intr.p2 * x;
    const double jxy = 2.0 * x * y * dradial + 2.0 * intr.p1 * x + 2.0 * intr.p2 * y;
    const double jyy = radial + 2.0 * y * y * dradial + 6.0 * intr.p1 * y + 2.0 * intr.p2 * x;
    const double det = jxx * jyy - jxy * jxy;
    if (!(std::abs(det) > 1e-12)) break;
    const double sx = -(jyy * fx - jxy * fy) / det;
    const double sy = -(jxx * fy - jxy * fx) / det;
    x += sx;
    y += sy;
    const double step = std::hypot(sx, sy);
    if (!std::isfinite(step)) break;
    if (step < opts.tolerance) return {x * intr.fx + intr.cx, y * intr.fy + intr.cy};
  }
  std::ostringstream msg;
  msg << "undistort_point did not converge at (" << p.x() << ", " << p.y()
      << "); distortion coefficients are too strong for this radius";
  throw Error(Errc::non_convergence, msg.str());
}

Homography::Homography(const Mat3& m, double scale_m_per_px) : h_(m), scale_(scale_m_per_px) {
  if (!h_.allFinite()) throw Error(Errc::invalid_argument, "homography has non-finite entries");
  if (!(scale_ > 0.0) || !std::isfinite(scale_))
    throw Error(Errc::invalid_argument, "scale_m_per_px must be positive");
  const double norm = h_.norm();
  if (norm == 0.0) throw Error(Errc::degenerate_configuration, "zero homography");
  h_ /= norm;
  if (h_(2, 2) < 0.0) h_ = -h_;
  if (h_(2, 2) == 0.0) {
    // Fall back to the first non-zero entry for the sign.
    for (int i = 0; i < 9; ++i) {
      const double v = h_(i / 3, i % 3);
      if (v != 0.0) {
        if (v < 0.0) h_ = -h_;
        break;
      }
    }
  }
  if (std::abs(h_.determinant()) <= 1e-12)
    throw Error(Errc::degenerate_configuration, "homography is singular");
}

Homography Homography::from_row_major(std::span<const double> h, double scale_m_per_px) {
  if (h.size() != 9) throw Error(Errc::parse, "homography needs 9 row-major entries");
  Mat3 m;
  for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = h[static_cast<std::size_t>(i)];
  return Homography(m, scale_m_per_px);
}

std::array<double, 9> Homography::row_major() const {
  std::array<double, 9> out{};
  for (int i = 0; i < 9; ++i) out[static_cast<std::size_t>(i)] = h_(i / 3, i % 3);
  return out;
}

Homography Homography::inverse() const { return Homography(h_.inverse(), scale_); }

Vec2 apply_projective(const Mat3& m, const Vec2& p) {
  const Eigen::Vector3d q = m * p.homogeneous();
  if (std::abs(q.z()) < 1e-12)
    throw Error(Errc::horizon, "point maps to the line at infinity");
  return q.hnormalized();
}

Vec2 apply_homography(const Homography& h, const Vec2& p) {
  if (!is_finite(p)) throw Error(Errc::invalid_argument, "apply_homography: non-finite input");
  return apply_projective(h.matrix(), p);
}

Homography estimate_homography(std::span<const PointCorrespondence> corrs, double scale_m_per_px) {
  const std::size_t n = corrs.size();
  if (n < 4) {
    throw Error(Errc::insufficient_points,
                "insufficient correspondences: need at least 4, got " + std::to_string(n));
  }
  std::vector<Vec2> cam, ortho;
  cam.reserve(n);
  ortho.reserve(n);
  for (const auto& c : corrs) {
    if (!is_finite(c.camera_pt) || !is_finite(c.ortho_pt))
      throw Error(Errc::invalid_argument, "non-finite correspondence");
    cam.push_back(c.camera_pt);
    ortho.push_back(c.ortho_pt);
  }
  const Mat3 tc = hartley_transform(cam);
  const Mat3 to = hartley_transform(ortho);
  for (auto& p : cam) p = (tc * p.homogeneous()).hnormalized();
  for (auto& p : ortho) p = (to * p.homogeneous()).hnormalized();
  if (n == 4 && any_three_collinear(cam))
    throw Error(Errc::degenerate_configuration, "three of four camera points are collinear");

  const Eigen::Index rows = std::max<Eigen::Index>(static_cast<Eigen::Index>(2 * n), 9);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, 9);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = cam[i].x(), y = cam[i].y();
    const double u = ortho[i].x(), v = ortho[i].y();
    const auto r = static_cast<Eigen::Index>(2 * i);
    a.row(r) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
    a.row(r + 1) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  if (sv(7) <= 1e-10 * sv(0) || sv(8) / sv(7) > 0.99)
    throw Error(Errc::degenerate_configuration, "correspondences do not determine a unique homography");

  const Eigen::VectorXd h = svd.matrixV().col(8);
  Mat3 hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  return Homography(to.inverse() * hn * tc, scale_m_per_px);
}

ReprojectionStats reprojection_stats(const Homography& h, std::span<const PointCorrespondence> corrs) {
  if (corrs.empty()) throw Error(Errc::insufficient_points, "reprojection_stats needs a correspondence");
  const Homography inv = h.inverse();
  ReprojectionStats s;
  s.per_point_err_camera.reserve(corrs.size());
  s.per_point_err_ortho.reserve(corrs.size());
  for (const auto& c : corrs) {
    s.per_point_err_ortho.push_back((apply_homography(h, c.camera_pt) - c.ortho_pt).norm());
    s.per_point_err_camera.push_back((apply_homography(inv, c.ortho_pt) - c.camera_pt).norm());
  }
  const auto mean = [](const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  s.mean_err_camera = mean(s.per_point_err_camera);
  s.mean_err_ortho = mean(s.per_point_err_ortho);
  return s;
}

void BoundingBox::validate() const {
  if (!all_finite({x_min, y_min, x_max, y_max}) || !(x_min < x_max) || !(y_min < y_max))
    throw Error(Errc::invalid_argument, "bounding box must satisfy x_min < x_max and y_min < y_max");
}

Vec2 back_project_point(const Vec2& p, const Intrinsics& intr, const Homography& h) {
  return apply_homography(h, undistort_point(p, intr)) * h.scale_m_per_px();
}

Vec2 back_project_detection(const BoundingBox& bbox, const Intrinsics& intr, const Homography& h) {
  bbox.validate();
  return back_project_point(bbox.bottom_midpoint(), intr, h);
}

}  // namespace tmc::calib
