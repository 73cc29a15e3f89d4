#pragma once

#include "tmc/geom_calib.hpp"
#include "tmc/geometry.hpp"

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tmc {

enum class Frame { camera_px, ground_m, ortho_px };

std::string_view to_string(Frame f);
Frame frame_from_string(std::string_view s);

/// Time-ordered positions of one vehicle in one coordinate frame.
struct Track {
  std::string track_id;
  std::string camera_id;
  Frame frame = Frame::ground_m;
  std::vector<Vec2> points;
  std::vector<double> timestamps;              // empty or one per point
  std::vector<calib::BoundingBox> bboxes;      // camera frame only; empty or one per point

  /// Checks point count, finiteness and timestamp ordering.
  void validate() const;
  double length() const { return polyline_length(points); }
  std::optional<double> start_time() const {
    return timestamps.empty() ? std::nullopt : std::optional<double>(timestamps.front());
  }
};

struct ResampledTrack : Track {
  double spacing = 0.0;
};

/// Drops consecutive duplicate points (and their timestamps / boxes).
Track dedup_consecutive(Track t);

/// Dedups every track and drops the ones left with fewer than two points,
/// logging a warning for each.
std::vector<Track> sanitize_tracks(std::vector<Track> tracks);

/// Places points on the source polyline at cumulative arc length 0, s, 2s, ...
/// and always keeps the final source point. Chord lengths equal the spacing
/// except where a source vertex falls between two samples.
ResampledTrack resample_uniform(const Track& t, double spacing);

/// Unit vector from the first point to the last.
Vec2 track_direction(const Track& t);

double point_to_polyline_distance(const Vec2& p, std::span<const Vec2> polyline);
inline double point_to_polyline_distance(const Vec2& p, const Track& t) {
  return point_to_polyline_distance(p, t.points);
}

using TrackDistance = std::function<double(const Track&, const Track&)>;

/// Symmetric mean point-to-polyline (Chamfer) distance. Points of each track
/// are used as given, so callers pass resampled tracks.
double track_distance_cmm(const Track& a, const Track& b);

}  // namespace tmc
