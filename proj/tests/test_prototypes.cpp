#include <doctest.h>

#include "tmc/error.hpp"
#include "tmc/prototypes.hpp"
#include "tmc/rng.hpp"
#include "tmc/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

using namespace tmc;
using namespace tmc::proto;

namespace {

Track make_track(std::vector<Vec2> pts, std::string id = "t") {
  Track t;
  t.track_id = std::move(id);
  t.points = std::move(pts);
  return t;
}

Track line_at(double y, std::string id, double x0 = 0.0, double x1 = 20.0) {
  return resample_uniform(make_track({{x0, y}, {x1, y}}, std::move(id)), 0.5);
}

RegionOfInterest square() {
  RegionOfInterest r;
  r.frame = Frame::ground_m;
  r.corners = {Vec2(-10, -10), Vec2(10, -10), Vec2(10, 10), Vec2(-10, 10)};
  return r;
}

Vec2 point_at_fraction(const std::vector<Vec2>& pts, double f) {
  double total = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) total += (pts[i] - pts[i - 1]).norm();
  const double s = f * total;
  double acc = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double len = (pts[i] - pts[i - 1]).norm();
    if (acc + len >= s) return pts[i - 1] + (pts[i] - pts[i - 1]) * ((s - acc) / len);
    acc += len;
  }
  return pts.back();
}

}  // namespace

TEST_CASE("featurize examples") {
  const auto f = featurize(make_track({{0, 0}, {1, 0}}), 3);
  REQUIRE(f.v.size() == 6);
  const std::vector<double> want{0, 0, 0.5, 0, 1, 0};
  for (std::size_t i = 0; i < 6; ++i) CHECK(f.v[i] == doctest::Approx(want[i]).epsilon(1e-15));
  CHECK(featurize(make_track({{0, 0}, {1, 0}})).v.size() == 64);
  CHECK_THROWS_AS(featurize(make_track({{2, 2}, {2, 2}})), Error);
  CHECK_THROWS_AS(featurize(make_track({{0, 0}, {1, 0}}), 1), Error);
}

TEST_CASE("featurize against arc-length walk") {
  Rng rng(17);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Vec2> pts;
    for (int i = 0; i < 2 + trial % 10; ++i) pts.emplace_back(u(rng), u(rng));
    const int n = 2 + trial % 40;
    const auto f = featurize(make_track(pts), n);
    REQUIRE(f.v.size() == static_cast<std::size_t>(2 * n));
    CHECK(f.v[0] == pts.front().x());
    CHECK(f.v[1] == pts.front().y());
    CHECK(f.v[2 * n - 2] == pts.back().x());
    CHECK(f.v[2 * n - 1] == pts.back().y());
    for (int i = 0; i < n; ++i) {
      const Vec2 q = point_at_fraction(pts, static_cast<double>(i) / (n - 1));
      CHECK(std::abs(f.v[2 * i] - q.x()) < 1e-9);
      CHECK(std::abs(f.v[2 * i + 1] - q.y()) < 1e-9);
    }
  }
}

TEST_CASE("kmeans k=1 puts everything together") {
  Rng rng(1);
  std::normal_distribution<double> g;
  std::vector<TrackFeature> feats(25);
  for (auto& f : feats) f.v = {g(rng), g(rng), g(rng)};
  const auto r = kmeans_pp_cluster(feats, 1, 9);
  REQUIRE(r.assignment.size() == 25);
  for (int a : r.assignment) CHECK(a == 0);
  REQUIRE(r.centroids.size() == 1);
}

TEST_CASE("kmeans recovers two separated groups for every seed") {
  Rng rng(2);
  std::uniform_real_distribution<double> jitter(-0.5, 0.5);
  std::vector<TrackFeature> feats;
  std::vector<int> truth;
  for (int i = 0; i < 40; ++i) {
    const double y = (i % 2 ? 50.0 : 0.0) + jitter(rng);
    feats.push_back(featurize(make_track({{0, y}, {20, y + jitter(rng)}}), 8));
    truth.push_back(i % 2);
  }
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto r = kmeans_pp_cluster(feats, 2, seed);
    for (std::size_t i = 0; i < feats.size(); ++i)
      CHECK((r.assignment[i] == r.assignment[0]) == (truth[i] == truth[0]));
  }
}

TEST_CASE("kmeans objective never increases") {
  Rng rng(3);
  std::normal_distribution<double> g;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::vector<TrackFeature> feats(120);
    for (auto& f : feats) f.v = {g(rng) * 3, g(rng), g(rng) + (g(rng) > 0 ? 4 : 0), g(rng)};
    const auto r = kmeans_pp_cluster(feats, 5, seed);
    REQUIRE_FALSE(r.objective_history.empty());
    for (std::size_t i = 1; i < r.objective_history.size(); ++i)
      CHECK(r.objective_history[i] <= r.objective_history[i - 1] * (1 + 1e-12));
    CHECK(r.iterations <= 100);
  }
}

TEST_CASE("kmeans is deterministic and reduces k") {
  std::vector<TrackFeature> feats(3);
  feats[0].v = {0, 0};
  feats[1].v = {5, 0};
  feats[2].v = {0, 5};
  const auto r = kmeans_pp_cluster(feats, 7, 4);
  CHECK(r.centroids.size() == 3);
  std::set<int> labels(r.assignment.begin(), r.assignment.end());
  CHECK(labels.size() == 3);
  const auto again = kmeans_pp_cluster(feats, 7, 4);
  CHECK(again.assignment == r.assignment);
  CHECK_THROWS_AS(kmeans_pp_cluster(feats, 0, 1), Error);
  CHECK_THROWS_AS(kmeans_pp_cluster({}, 1, 1), Error);
}

TEST_CASE("medoid examples") {
  const std::vector<Track> cluster{line_at(0, "a"), line_at(1, "b"), line_at(10, "c")};
  CHECK(track_distance_cmm(cluster[0], cluster[1]) == doctest::Approx(1.0));
  CHECK(track_distance_cmm(cluster[0], cluster[2]) == doctest::Approx(10.0));
  CHECK(track_distance_cmm(cluster[1], cluster[2]) == doctest::Approx(9.0));
  CHECK(select_medoid(cluster).track_id == "b");

  std::vector<Track> perm{cluster[2], cluster[1], cluster[0]};
  CHECK(select_medoid(perm).track_id == "b");
  perm = {cluster[1], cluster[2], cluster[0]};
  CHECK(select_medoid(perm).track_id == "b");

  CHECK(select_medoid({cluster[2]}).track_id == "c");
  // Equal mean distances: lowest id wins.
  CHECK(select_medoid({line_at(0, "z"), line_at(2, "y")}).track_id == "y");
  CHECK_THROWS_AS(select_medoid({}), Error);
}

TEST_CASE("learn prototypes single track and counts") {
  auto roi = square();
  roi.lane_counts[11] = 2;
  roi.lane_counts[2] = 1;
  std::map<int, std::vector<Track>> training;
  training[11] = {line_at(0, "only", -20, 20)};
  const auto set = learn_prototypes(training, roi, 5);
  REQUIRE(set.classes.at(11).size() == 1);
  CHECK(set.classes.at(11)[0].track_id == "only");
  CHECK(set.classes.at(2).empty());
  CHECK(set.size() == 1);
  CHECK(set.flatten().at(0).cls == MovementClass::from_index(11));

  training[11].push_back(line_at(0.2, "b", -20, 20));
  training[11].push_back(line_at(4, "c", -20, 20));
  const auto three = learn_prototypes(training, roi, 5);
  CHECK(three.classes.at(11).size() == 2);

  Track wrong = line_at(1, "w");
  wrong.frame = Frame::camera_px;
  training[11].push_back(wrong);
  CHECK_THROWS_AS(learn_prototypes(training, roi, 5), Error);
}

TEST_CASE("two-lane through movement gives one prototype per lane") {
  const auto spec = synth::four_leg_intersection();
  const int cls = 11;
  const auto& lanes = spec.movements.at(cls).lanes;
  REQUIRE(lanes.size() == 2);
  const double half_width = 0.5 * synth::FourLegOptions{}.lane_width;
  int ok = 0;
  const int n_seeds = 20;
  for (int seed = 0; seed < n_seeds; ++seed) {
    const auto scene = synth::generate_scene(spec, 300, 100 + seed);
    std::map<int, std::vector<Track>> training;
    for (const auto& lt : scene.ground_tracks)
      if (lt.cls.index() == cls) training[cls].push_back(resample_uniform(lt.track, 0.2));
    const auto set = learn_prototypes(training, spec.roi, derive_seed(seed, "prototypes"));
    const auto& protos = set.classes.at(cls);
    bool good = protos.size() == 2;
    std::set<std::size_t> matched;
    for (const auto& p : protos) {
      // Members of the training set.
      const bool member = std::any_of(training[cls].begin(), training[cls].end(),
                                      [&](const Track& t) { return t.track_id == p.track_id; });
      CHECK(member);
      double mean_in_roi = 0.0;
      std::size_t best_lane = 0;
      double best = 1e300;
      for (std::size_t l = 0; l < lanes.size(); ++l) {
        double sum = 0.0;
        int n = 0;
        for (const auto& q : p.points) {
          if (!spec.roi.contains(q)) continue;
          sum += point_to_polyline_distance(q, lanes[l]);
          ++n;
        }
        const double m = n ? sum / n : 1e300;
        if (m < best) {
          best = m;
          best_lane = l;
        }
      }
      mean_in_roi = best;
      good = good && mean_in_roi < half_width;
      matched.insert(best_lane);
    }
    good = good && matched.size() == 2;
    ok += good;
  }
  MESSAGE(ok << "/" << n_seeds << " seeds with one prototype per lane");
  CHECK(ok >= 19);
}

TEST_CASE("learn prototypes is deterministic and translation equivariant") {
  const auto spec = synth::four_leg_intersection();
  const auto scene = synth::generate_scene(spec, 200, 77);
  std::map<int, std::vector<Track>> training, shifted;
  const Vec2 offset(137.0, -52.0);
  for (const auto& lt : scene.ground_tracks) {
    Track r = resample_uniform(lt.track, 0.2);
    training[lt.cls.index()].push_back(r);
    for (auto& p : r.points) p += offset;
    shifted[lt.cls.index()].push_back(r);
  }
  RegionOfInterest roi2 = spec.roi;
  for (auto& c : roi2.corners) c += offset;

  const auto a = learn_prototypes(training, spec.roi, 3);
  const auto b = learn_prototypes(training, spec.roi, 3);
  const auto c = learn_prototypes(shifted, roi2, 3);
  for (const auto& [cls, protos] : a.classes) {
    REQUIRE(b.classes.at(cls).size() == protos.size());
    REQUIRE(c.classes.at(cls).size() == protos.size());
    CHECK(protos.size() <= static_cast<std::size_t>(spec.roi.lanes(MovementClass::from_index(cls))));
    for (std::size_t i = 0; i < protos.size(); ++i) {
      CHECK(b.classes.at(cls)[i].track_id == protos[i].track_id);
      CHECK(c.classes.at(cls)[i].track_id == protos[i].track_id);
      CHECK((c.classes.at(cls)[i].points.front() - protos[i].points.front() - offset).norm() < 1e-9);
    }
  }
}
