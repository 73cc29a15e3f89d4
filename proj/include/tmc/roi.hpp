#pragma once

#include "tmc/geometry.hpp"
#include "tmc/track.hpp"

#include <array>
#include <compare>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tmc {

enum class Edge : int { N = 0, E = 1, S = 2, W = 3 };

inline constexpr std::array<Edge, 4> kEdges{Edge::N, Edge::E, Edge::S, Edge::W};
inline constexpr int kNumClasses = 12;

char to_char(Edge e);
Edge edge_from_char(char c);

/// Ordered (entry, exit) pair of distinct ROI edges.
///
/// Indices run 1..12: entry edges in N, E, S, W order and, for each, the three
/// remaining exits in the same order, i.e. 1 = N->E, 2 = N->S, 3 = N->W,
/// 4 = E->N, ..., 12 = W->S.
class MovementClass {
 public:
  MovementClass(Edge entry, Edge exit);

  static MovementClass from_index(int index);
  static std::array<MovementClass, kNumClasses> all();

  Edge entry() const { return entry_; }
  Edge exit() const { return exit_; }
  int index() const;
  std::string name() const;  // e.g. "W->E"

  auto operator<=>(const MovementClass& o) const { return index() <=> o.index(); }
  bool operator==(const MovementClass& o) const = default;

 private:
  Edge entry_;
  Edge exit_;
};

/// Quadrilateral whose edge i runs from corners[i] to corners[i+1] and carries labels[i].
struct RegionOfInterest {
  Frame frame = Frame::ortho_px;
  std::array<Vec2, 4> corners;
  std::array<Edge, 4> labels{Edge::N, Edge::E, Edge::S, Edge::W};
  std::map<int, int> lane_counts;  // class index -> lanes

  void validate() const;
  std::pair<Vec2, Vec2> edge_segment(Edge e) const;
  bool contains(const Vec2& p) const;
  int lanes(const MovementClass& c) const;

  /// Point-to-segment distances to each edge, ordered by label N, E, S, W.
  std::array<double, 4> edge_distances(const Vec2& p) const;
  Edge nearest_edge(const Vec2& p) const;
};

/// Corners mapped point-wise; edges stay straight under any projective map.
RegionOfInterest transform_roi(const RegionOfInterest& roi, Frame frame,
                               const std::function<Vec2(const Vec2&)>& map);

bool is_simple_quad(const std::array<Vec2, 4>& c);

struct CrossingEvent {
  Edge edge;
  std::size_t segment_index;
  Vec2 point;
  double arc_pos;
};

/// All crossings of the track with ROI edges in arc-length order. A track
/// vertex lying on an edge is reported once; a hit at an ROI corner is
/// attributed to the adjacent edge whose outer side holds the track portion
/// outside the ROI.
std::vector<CrossingEvent> edge_crossings(const Track& t, const RegionOfInterest& roi);

/// Training label: (first crossing edge, last crossing edge) when they differ.
std::optional<MovementClass> label_training_track(const Track& t, const RegionOfInterest& roi);

/// Entry/exit assignment with nearest-edge fallback for tracks that start or
/// end inside the ROI. Throws Errc::unclassifiable when the track neither
/// crosses nor enters the ROI.
MovementClass entry_exit_class(const Track& t, const RegionOfInterest& roi);

}  // namespace tmc
