#include "tmc/prototypes.hpp"

#include "tmc/error.hpp"
#include "tmc/rng.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <limits>
#include <numeric>

namespace tmc::proto {

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

std::pair<int, double> nearest_centroid(const std::vector<double>& x,
                                        const std::vector<std::vector<double>>& centroids) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = sq_dist(x, centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return {best, best_d};
}

}  // namespace

TrackFeature featurize(const Track& t, int n_points) {
  if (n_points < 2) throw Error(Errc::invalid_argument, "featurize needs at least two points");
  const double total = t.length();
  if (t.points.size() < 2 || !(total > 0.0))
    throw Error(Errc::degenerate_track, "cannot featurize degenerate track " + t.track_id);
  TrackFeature f;
  f.v.reserve(2 * static_cast<std::size_t>(n_points));
  std::size_t seg = 0;
  double seg_start = 0.0;
  for (int k = 0; k < n_points; ++k) {
    const double s = total * static_cast<double>(k) / static_cast<double>(n_points - 1);
    while (seg + 2 < t.points.size() && seg_start + (t.points[seg + 1] - t.points[seg]).norm() < s) {
      seg_start += (t.points[seg + 1] - t.points[seg]).norm();
      ++seg;
    }
    Vec2 p;
    if (k == 0) {
      p = t.points.front();
    } else if (k == n_points - 1) {
      p = t.points.back();
    } else {
      const double len = (t.points[seg + 1] - t.points[seg]).norm();
      const double a = len > 0.0 ? std::clamp((s - seg_start) / len, 0.0, 1.0) : 0.0;
      p = t.points[seg] + a * (t.points[seg + 1] - t.points[seg]);
    }
    f.v.push_back(p.x());
    f.v.push_back(p.y());
  }
  return f;
}

KMeansResult kmeans_pp_cluster(const std::vector<TrackFeature>& features, int k, std::uint64_t seed,
                               int max_iterations) {
  if (k < 1) throw Error(Errc::invalid_argument, "kmeans needs k >= 1");
  if (features.empty()) throw Error(Errc::invalid_argument, "kmeans needs at least one feature");
  const std::size_t n = features.size();
  if (static_cast<std::size_t>(k) > n) {
    spdlog::warn("k-means: reducing k from {} to {} (not enough tracks)", k, n);
    k = static_cast<int>(n);
  }
  const std::size_t dim = features.front().v.size();
  for (const auto& f : features)
    if (f.v.size() != dim) throw Error(Errc::invalid_argument, "feature dimensions differ");

  Rng rng(seed);
  KMeansResult r;
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // D^2 seeding.
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::size_t first = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  r.centroids.push_back(features[first].v);
  while (r.centroids.size() < static_cast<std::size_t>(k)) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], sq_dist(features[i].v, r.centroids.back()));
      total += d2[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = unit(rng) * total;
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > target && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = r.centroids.size() % n;  // every point already coincides with a centroid
    }
    r.centroids.push_back(features[pick].v);
  }

  r.assignment.assign(n, -1);
  for (int it = 0; it < max_iterations; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const int c = nearest_centroid(features[i].v, r.centroids).first;
      if (c != r.assignment[i]) {
        r.assignment[i] = c;
        changed = true;
      }
    }
    // Empty clusters take the point farthest from its current centroid.
    for (int c = 0; c < k; ++c) {
      if (std::find(r.assignment.begin(), r.assignment.end(), c) != r.assignment.end()) continue;
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = sq_dist(features[i].v, r.centroids[static_cast<std::size_t>(r.assignment[i])]);
        const auto members = std::count(r.assignment.begin(), r.assignment.end(), r.assignment[i]);
        if (members > 1 && d > far_d) {
          far_d = d;
          far = i;
        }
      }
      r.assignment[far] = c;
      changed = true;
    }
    for (int c = 0; c < k; ++c) {
      std::vector<double> mean(dim, 0.0);
      std::size_t cnt = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (r.assignment[i] != c) continue;
        for (std::size_t d = 0; d < dim; ++d) mean[d] += features[i].v[d];
        ++cnt;
      }
      for (auto& m : mean) m /= static_cast<double>(cnt);
      r.centroids[static_cast<std::size_t>(c)] = std::move(mean);
    }
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      sse += sq_dist(features[i].v, r.centroids[static_cast<std::size_t>(r.assignment[i])]);
    r.objective_history.push_back(sse);
    r.iterations = it + 1;
    if (!changed) break;
  }
  return r;
}

const Track& select_medoid(const std::vector<Track>& cluster, const TrackDistance& dist) {
  if (cluster.empty()) throw Error(Errc::invalid_argument, "select_medoid on empty cluster");
  if (cluster.size() == 1) return cluster.front();
  const std::size_t n = cluster.size();
  std::vector<double> sum(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = dist(cluster[i], cluster[j]);
      sum[i] += d;
      sum[j] += d;
    }
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (sum[i] < sum[best] || (sum[i] == sum[best] && cluster[i].track_id < cluster[best].track_id)) best = i;
  }
  return cluster[best];
}

std::vector<Prototype> PrototypeSet::flatten() const {
  std::vector<Prototype> out;
  for (const auto& [idx, tracks] : classes)
    for (const auto& t : tracks) out.push_back({MovementClass::from_index(idx), t});
  return out;
}

std::size_t PrototypeSet::size() const {
  std::size_t n = 0;
  for (const auto& [idx, tracks] : classes) n += tracks.size();
  return n;
}

PrototypeSet learn_prototypes(const std::map<int, std::vector<Track>>& training, const RegionOfInterest& roi,
                              std::uint64_t seed, const LearnOptions& opts) {
  PrototypeSet set;
  set.frame = roi.frame;
  set.seed = seed;
  set.feature_points = opts.feature_points;
  for (const MovementClass& cls : MovementClass::all()) {
    auto& out = set.classes[cls.index()];
    const auto it = training.find(cls.index());
    if (it == training.end() || it->second.empty()) {
      if (roi.lanes(cls) > 0) spdlog::warn("class {} ({}): no training tracks, no prototypes", cls.index(), cls.name());
      continue;
    }
    const auto& tracks = it->second;
    for (const auto& t : tracks) {
      if (t.frame != roi.frame) throw Error(Errc::frame_mismatch, "training track frame differs from ROI frame");
    }
    const int lanes = roi.lanes(cls);
    if (lanes <= 0) continue;
    std::vector<TrackFeature> feats;
    feats.reserve(tracks.size());
    for (const auto& t : tracks) feats.push_back(featurize(t, opts.feature_points));
    const int k = std::min<int>(lanes, static_cast<int>(tracks.size()));
    const auto km = kmeans_pp_cluster(feats, k, derive_seed(seed, "kmeans/" + std::to_string(cls.index())));
    for (int c = 0; c < k; ++c) {
      std::vector<Track> members;
      for (std::size_t i = 0; i < tracks.size(); ++i)
        if (km.assignment[i] == c) members.push_back(tracks[i]);
      if (!members.empty()) out.push_back(select_medoid(members, opts.distance));
    }
  }
  return set;
}

}  // namespace tmc::proto
