#pragma once

#include "tmc/roi.hpp"
#include "tmc/track.hpp"

#include <cstdint>
#include <map>
#include <vector>

namespace tmc::proto {

/// Track resampled to a fixed number of points by arc-length fraction,
/// stored as x0, y0, x1, y1, ...
struct TrackFeature {
  std::vector<double> v;
};

TrackFeature featurize(const Track& t, int n_points = 32);

struct KMeansResult {
  std::vector<int> assignment;
  std::vector<std::vector<double>> centroids;
  std::vector<double> objective_history;  // within-cluster sum of squares after each Lloyd step
  int iterations = 0;
};

/// k-means++ seeding followed by Lloyd iterations (stops when assignments
/// are stable or after max_iterations). Requests for more clusters than there
/// are features are reduced with a warning.
KMeansResult kmeans_pp_cluster(const std::vector<TrackFeature>& features, int k, std::uint64_t seed,
                               int max_iterations = 100);

/// Member minimizing the mean distance to the other members; ties go to the
/// lowest track_id.
const Track& select_medoid(const std::vector<Track>& cluster, const TrackDistance& dist = track_distance_cmm);

struct Prototype {
  MovementClass cls;
  Track track;
};

struct PrototypeSet {
  Frame frame = Frame::ground_m;
  std::map<int, std::vector<Track>> classes;  // class index -> one track per lane
  std::uint64_t seed = 0;
  int feature_points = 32;

  std::vector<Prototype> flatten() const;
  std::size_t size() const;
};

struct LearnOptions {
  int feature_points = 32;
  TrackDistance distance = track_distance_cmm;
};

/// Per class: cluster into lane_counts[class] groups in feature space and keep
/// each group's CMM medoid.
PrototypeSet learn_prototypes(const std::map<int, std::vector<Track>>& training, const RegionOfInterest& roi,
                              std::uint64_t seed, const LearnOptions& opts = {});

}  // namespace tmc::proto
