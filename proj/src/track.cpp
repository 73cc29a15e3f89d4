#include "tmc/track.hpp"

#include "tmc/error.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <limits>

namespace tmc {

std::string_view to_string(Frame f) {
  switch (f) {
    case Frame::camera_px: return "camera-px";
    case Frame::ground_m: return "ground-m";
    case Frame::ortho_px: return "ortho-px";
  }
  return "?";
}

Frame frame_from_string(std::string_view s) {
  if (s == "camera-px") return Frame::camera_px;
  if (s == "ground-m") return Frame::ground_m;
  if (s == "ortho-px") return Frame::ortho_px;
  throw Error(Errc::parse, "unknown coordinate frame '" + std::string(s) + "'");
}

void Track::validate() const {
  if (points.size() < 2)
    throw Error(Errc::degenerate_track, "track " + track_id + " has fewer than two points");
  for (const auto& p : points)
    if (!is_finite(p)) throw Error(Errc::degenerate_track, "track " + track_id + " has non-finite points");
  if (!timestamps.empty()) {
    if (timestamps.size() != points.size())
      throw Error(Errc::degenerate_track, "track " + track_id + " timestamp count mismatch");
    for (std::size_t i = 1; i < timestamps.size(); ++i)
      if (!(timestamps[i] > timestamps[i - 1]))
        throw Error(Errc::degenerate_track, "track " + track_id + " timestamps not increasing");
  }
  if (!bboxes.empty() && bboxes.size() != points.size())
    throw Error(Errc::degenerate_track, "track " + track_id + " bbox count mismatch");
}

Track dedup_consecutive(Track t) {
  if (t.points.empty()) return t;
  const bool has_ts = t.timestamps.size() == t.points.size();
  const bool has_bb = t.bboxes.size() == t.points.size();
  std::size_t w = 0;
  for (std::size_t r = 0; r < t.points.size(); ++r) {
    if (r > 0 && t.points[r] == t.points[w - 1]) continue;
    t.points[w] = t.points[r];
    if (has_ts) t.timestamps[w] = t.timestamps[r];
    if (has_bb) t.bboxes[w] = t.bboxes[r];
    ++w;
  }
  t.points.resize(w);
  if (has_ts) t.timestamps.resize(w);
  if (has_bb) t.bboxes.resize(w);
  return t;
}

std::vector<Track> sanitize_tracks(std::vector<Track> tracks) {
  std::vector<Track> out;
  out.reserve(tracks.size());
  for (auto& t : tracks) {
    Track d = dedup_consecutive(std::move(t));
    if (d.points.size() < 2) {
      spdlog::warn("dropping track {} ({}): fewer than two distinct points", d.track_id, d.camera_id);
      continue;
    }
    out.push_back(std::move(d));
  }
  return out;
}

ResampledTrack resample_uniform(const Track& t, double spacing) {
  if (!(spacing > 0.0)) throw Error(Errc::invalid_argument, "resample spacing must be positive");
  if (t.points.size() < 2)
    throw Error(Errc::degenerate_track, "track " + t.track_id + " has fewer than two points");
  const double total = t.length();
  if (!(total > 0.0)) throw Error(Errc::degenerate_track, "track " + t.track_id + " has zero length");

  ResampledTrack out;
  out.track_id = t.track_id;
  out.camera_id = t.camera_id;
  out.frame = t.frame;
  out.spacing = spacing;
  const bool has_ts = t.timestamps.size() == t.points.size();

  // Samples are generated from the integer multiple so error does not accumulate.
  const auto n_full = static_cast<std::size_t>(std::floor(total / spacing + 1e-9));
  out.points.reserve(n_full + 2);
  std::size_t seg = 0;
  double seg_start = 0.0;  // arc length at points[seg]
  for (std::size_t k = 0; k <= n_full; ++k) {
    const double s = std::min(static_cast<double>(k) * spacing, total);
    while (seg + 1 < t.points.size() - 1 &&
           seg_start + (t.points[seg + 1] - t.points[seg]).norm() < s) {
      seg_start += (t.points[seg + 1] - t.points[seg]).norm();
      ++seg;
    }
    const double len = (t.points[seg + 1] - t.points[seg]).norm();
    const double f = len > 0.0 ? std::clamp((s - seg_start) / len, 0.0, 1.0) : 0.0;
    out.points.push_back(t.points[seg] + f * (t.points[seg + 1] - t.points[seg]));
    if (has_ts) out.timestamps.push_back(t.timestamps[seg] + f * (t.timestamps[seg + 1] - t.timestamps[seg]));
  }
  out.points.front() = t.points.front();
  if (has_ts) out.timestamps.front() = t.timestamps.front();

  const double tail = total - static_cast<double>(n_full) * spacing;
  if (tail > 1e-9 * std::max(1.0, total)) {
    out.points.push_back(t.points.back());
    if (has_ts) out.timestamps.push_back(t.timestamps.back());
  } else {
    out.points.back() = t.points.back();
    if (has_ts) out.timestamps.back() = t.timestamps.back();
  }
  // Interpolated timestamps can collide when the source has pauses; keep them
  // strictly increasing.
  for (std::size_t i = 1; i < out.timestamps.size(); ++i) {
    if (!(out.timestamps[i] > out.timestamps[i - 1]))
      out.timestamps[i] = std::nextafter(out.timestamps[i - 1], std::numeric_limits<double>::infinity());
  }
  return out;
}

Vec2 track_direction(const Track& t) {
  if (t.points.size() < 2) throw Error(Errc::degenerate_track, "track " + t.track_id + " too short");
  const Vec2 d = t.points.back() - t.points.front();
  const double n = d.norm();
  if (!(n > 0.0)) throw Error(Errc::degenerate_track, "track " + t.track_id + " has coincident endpoints");
  return d / n;
}

double point_to_polyline_distance(const Vec2& p, std::span<const Vec2> polyline) {
  if (polyline.empty()) return std::numeric_limits<double>::infinity();
  if (polyline.size() == 1) return (p - polyline[0]).norm();
  double best2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < polyline.size(); ++i) {
    const Vec2& a = polyline[i - 1];
    const Vec2 ab = polyline[i] - a;
    const Vec2 ap = p - a;
    const double len2 = ab.squaredNorm();
    double d2;
    if (len2 == 0.0) {
      d2 = ap.squaredNorm();
    } else {
      const double f = std::clamp(ap.dot(ab) / len2, 0.0, 1.0);
      d2 = (ap - f * ab).squaredNorm();
    }
    if (d2 < best2) best2 = d2;
  }
  return std::sqrt(best2);
}

double track_distance_cmm(const Track& a, const Track& b) {
  if (a.points.size() < 2 || b.points.size() < 2)
    throw Error(Errc::degenerate_track, "track_distance_cmm needs tracks with two or more points");
  const auto directed = [](const Track& from, const Track& to) {
    double sum = 0.0;
    for (const auto& p : from.points) sum += point_to_polyline_distance(p, to.points);
    return sum / static_cast<double>(from.points.size());
  };
  return 0.5 * (directed(a, b) + directed(b, a));
}

}  // namespace tmc
