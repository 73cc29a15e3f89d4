#pragma once

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace tmc {

using Vec2 = Eigen::Vector2d;
using Mat3 = Eigen::Matrix3d;

struct Box2 {
  Vec2 min{Vec2::Constant(std::numeric_limits<double>::infinity())};
  Vec2 max{Vec2::Constant(-std::numeric_limits<double>::infinity())};

  void extend(const Vec2& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }
  void extend(const Box2& b) {
    min = min.cwiseMin(b.min);
    max = max.cwiseMax(b.max);
  }
  bool empty() const { return !(min.x() <= max.x() && min.y() <= max.y()); }
};

inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

inline bool is_finite(const Vec2& p) { return std::isfinite(p.x()) && std::isfinite(p.y()); }

/// Distance from p to the closed segment [a, b].
double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b);

/// Closest point on [a, b] to p.
Vec2 closest_point_on_segment(const Vec2& p, const Vec2& a, const Vec2& b);

struct SegmentHit {
  double t;  // parameter along the first segment
  double u;  // parameter along the second segment
};

/// Intersection of [p0,p1] with [q0,q1]; parallel or collinear segments report no hit.
std::optional<SegmentHit> intersect_segments(const Vec2& p0, const Vec2& p1, const Vec2& q0,
                                             const Vec2& q1);

/// Even-odd rule; boundary points may land on either side.
bool point_in_polygon(const Vec2& p, std::span<const Vec2> polygon);

double polyline_length(std::span<const Vec2> pts);

Box2 bounding_box(std::span<const Vec2> pts);

}  // namespace tmc
