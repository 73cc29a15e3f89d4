#include "tmc/roi.hpp"

#include "tmc/error.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <numeric>

namespace tmc {

char to_char(Edge e) { return "NESW"[static_cast<int>(e)]; }

Edge edge_from_char(char c) {
  switch (c) {
    case 'N': return Edge::N;
    case 'E': return Edge::E;
    case 'S': return Edge::S;
    case 'W': return Edge::W;
    default: throw Error(Errc::parse, std::string("unknown edge label '") + c + "'");
  }
}

MovementClass::MovementClass(Edge entry, Edge exit) : entry_(entry), exit_(exit) {
  if (entry == exit) throw Error(Errc::invalid_argument, "movement class needs distinct entry and exit");
}

int MovementClass::index() const {
  const int en = static_cast<int>(entry_);
  const int ex = static_cast<int>(exit_);
  return en * 3 + (ex < en ? ex : ex - 1) + 1;
}

MovementClass MovementClass::from_index(int index) {
  if (index < 1 || index > kNumClasses)
    throw Error(Errc::invalid_argument, "movement class index out of range: " + std::to_string(index));
  const int en = (index - 1) / 3;
  int ex = (index - 1) % 3;
  if (ex >= en) ++ex;
  return {static_cast<Edge>(en), static_cast<Edge>(ex)};
}

std::array<MovementClass, kNumClasses> MovementClass::all() {
  return {from_index(1), from_index(2),  from_index(3),  from_index(4),
          from_index(5), from_index(6),  from_index(7),  from_index(8),
          from_index(9), from_index(10), from_index(11), from_index(12)};
}

std::string MovementClass::name() const {
  return std::string{to_char(entry_)} + "->" + to_char(exit_);
}

bool is_simple_quad(const std::array<Vec2, 4>& c) {
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      if ((c[i] - c[j]).norm() == 0.0) return false;
  // Only opposite edges can intersect in a quadrilateral.
  for (int i = 0; i < 2; ++i) {
    if (intersect_segments(c[i], c[i + 1], c[i + 2], c[(i + 3) % 4])) return false;
  }
  const double area = cross2(c[1] - c[0], c[2] - c[0]) + cross2(c[2] - c[0], c[3] - c[0]);
  return std::abs(area) > 0.0;
}

void RegionOfInterest::validate() const {
  for (const auto& p : corners)
    if (!is_finite(p)) throw Error(Errc::invalid_argument, "ROI corner is not finite");
  if (!is_simple_quad(corners)) throw Error(Errc::invalid_argument, "ROI corners do not form a simple quadrilateral");
  std::array<int, 4> seen{};
  for (Edge e : labels) ++seen[static_cast<int>(e)];
  for (int s : seen)
    if (s != 1) throw Error(Errc::invalid_argument, "ROI edge labels must be a permutation of N,E,S,W");
  for (const auto& [cls, n] : lane_counts) {
    if (cls < 1 || cls > kNumClasses) throw Error(Errc::invalid_argument, "lane count for unknown class");
    if (n < 0) throw Error(Errc::invalid_argument, "lane counts must be non-negative");
  }
}

std::pair<Vec2, Vec2> RegionOfInterest::edge_segment(Edge e) const {
  for (int i = 0; i < 4; ++i)
    if (labels[i] == e) return {corners[i], corners[(i + 1) % 4]};
  throw Error(Errc::invalid_argument, "ROI has no such edge");
}

bool RegionOfInterest::contains(const Vec2& p) const { return point_in_polygon(p, corners); }

int RegionOfInterest::lanes(const MovementClass& c) const {
  const auto it = lane_counts.find(c.index());
  return it == lane_counts.end() ? 1 : it->second;
}

std::array<double, 4> RegionOfInterest::edge_distances(const Vec2& p) const {
  std::array<double, 4> d{};
  for (Edge e : kEdges) {
    const auto [a, b] = edge_segment(e);
    d[static_cast<int>(e)] = point_segment_distance(p, a, b);
  }
  return d;
}

Edge RegionOfInterest::nearest_edge(const Vec2& p) const {
  const auto d = edge_distances(p);
  return static_cast<Edge>(std::min_element(d.begin(), d.end()) - d.begin());
}

RegionOfInterest transform_roi(const RegionOfInterest& roi, Frame frame,
                               const std::function<Vec2(const Vec2&)>& map) {
  RegionOfInterest out = roi;
  out.frame = frame;
  for (auto& c : out.corners) c = map(c);
  out.validate();
  return out;
}

namespace {

struct RawHit {
  int edge_slot;  // index into roi.corners / labels
  double t;
  Vec2 point;
};

// Signed distance of p to the outside of edge slot i (positive = outside).
double outside_distance(const RegionOfInterest& roi, int i, const Vec2& p) {
  const Vec2& a = roi.corners[i];
  const Vec2& b = roi.corners[(i + 1) % 4];
  Vec2 centroid = Vec2::Zero();
  for (const auto& c : roi.corners) centroid += c / 4.0;
  const Vec2 dir = (b - a).normalized();
  const double interior_sign = cross2(dir, centroid - a) >= 0.0 ? 1.0 : -1.0;
  return -interior_sign * cross2(dir, p - a);
}

// Resolves a hit at an ROI corner shared by two edge slots.
int resolve_corner(const RegionOfInterest& roi, const Track& t, std::size_t seg, const Vec2& hit,
                   int slot_a, int slot_b) {
  const auto& pts = t.points;
  const Vec2 before = (pts[seg] - hit).norm() > 0.0 ? Vec2(0.5 * (pts[seg] + hit))
                      : seg > 0                     ? Vec2(0.5 * (pts[seg - 1] + pts[seg]))
                                                    : pts[seg];
  const Vec2 after = (pts[seg + 1] - hit).norm() > 0.0 ? Vec2(0.5 * (pts[seg + 1] + hit))
                     : seg + 2 < pts.size()            ? Vec2(0.5 * (pts[seg + 1] + pts[seg + 2]))
                                                       : pts[seg + 1];
  const bool in_before = roi.contains(before);
  const bool in_after = roi.contains(after);
  const Vec2& outside = (in_after && !in_before) ? before : (!in_after && in_before) ? after : before;
  return outside_distance(roi, slot_a, outside) >= outside_distance(roi, slot_b, outside) ? slot_a : slot_b;
}

}  // namespace

std::vector<CrossingEvent> edge_crossings(const Track& t, const RegionOfInterest& roi) {
  if (t.frame != roi.frame)
    throw Error(Errc::frame_mismatch, "track " + t.track_id + " is in " + std::string(to_string(t.frame)) +
                                          " but the ROI is in " + std::string(to_string(roi.frame)));
  std::vector<CrossingEvent> out;
  const auto& pts = t.points;
  if (pts.size() < 2) return out;
  double scale = 0.0;
  for (const auto& c : roi.corners) scale = std::max(scale, c.cwiseAbs().maxCoeff());
  const double merge_eps = 1e-9 * std::max(1.0, scale);

  double arc = 0.0;
  std::vector<RawHit> hits;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double seg_len = (pts[i + 1] - pts[i]).norm();
    const bool last = i + 2 == pts.size();
    hits.clear();
    for (int k = 0; k < 4; ++k) {
      const auto h = intersect_segments(pts[i], pts[i + 1], roi.corners[k], roi.corners[(k + 1) % 4]);
      if (!h) continue;
      // A hit at the segment end belongs to the next segment's start.
      if (h->t >= 1.0 && !last) continue;
      hits.push_back({k, h->t, pts[i] + h->t * (pts[i + 1] - pts[i])});
    }
    std::sort(hits.begin(), hits.end(), [](const RawHit& a, const RawHit& b) { return a.t < b.t; });
    for (std::size_t h = 0; h < hits.size(); ++h) {
      int slot = hits[h].edge_slot;
      if (h + 1 < hits.size() && (hits[h + 1].point - hits[h].point).norm() <= merge_eps) {
        slot = resolve_corner(roi, t, i, hits[h].point, slot, hits[h + 1].edge_slot);
        ++h;
      }
      out.push_back({roi.labels[slot], i, hits[h].point, arc + hits[h].t * seg_len});
    }
    arc += seg_len;
  }
  return out;
}

std::optional<MovementClass> label_training_track(const Track& t, const RegionOfInterest& roi) {
  const auto crossings = edge_crossings(t, roi);
  if (crossings.size() < 2) return std::nullopt;
  const Edge entry = crossings.front().edge;
  const Edge exit = crossings.back().edge;
  if (entry == exit) return std::nullopt;
  return MovementClass(entry, exit);
}

MovementClass entry_exit_class(const Track& t, const RegionOfInterest& roi) {
  const auto crossings = edge_crossings(t, roi);
  if (t.points.empty()) throw Error(Errc::unclassifiable, "empty track");
  const bool start_inside = roi.contains(t.points.front());
  const bool end_inside = roi.contains(t.points.back());
  if (crossings.empty() && !start_inside && !end_inside)
    throw Error(Errc::unclassifiable, "track " + t.track_id + " never reaches the ROI");

  const Edge entry = start_inside ? roi.nearest_edge(t.points.front()) : crossings.front().edge;
  Edge exit = end_inside ? roi.nearest_edge(t.points.back()) : crossings.back().edge;
  if (entry == exit) {
    const auto d = roi.edge_distances(t.points.back());
    double best = std::numeric_limits<double>::infinity();
    for (Edge e : kEdges) {
      if (e == entry) continue;
      if (d[static_cast<int>(e)] < best) {
        best = d[static_cast<int>(e)];
        exit = e;
      }
    }
    spdlog::debug("track {}: entry and exit both {}, exit reassigned to {}", t.track_id, to_char(entry),
                  to_char(exit));
  }
  return {entry, exit};
}

}  // namespace tmc
