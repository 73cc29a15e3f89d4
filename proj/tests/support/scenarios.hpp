#pragma once

#include "tmc/pipeline.hpp"
#include "tmc/rng.hpp"

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <vector>

namespace tmc::testing {

using classify::Domain;
using classify::Method;

// Every class on its own lane: entry lanes ranked by exit, exit lanes ranked
// by entry, one lane pitch apart. Approach legs have different lengths so no
// two classes share an entry-to-exit direction.
inline synth::IntersectionSpec separated_intersection(double pitch = 3.0) {
  const auto outward = [](Edge e) -> Vec2 {
    switch (e) {
      case Edge::N: return {0, -1};
      case Edge::E: return {1, 0};
      case Edge::S: return {0, 1};
      case Edge::W: return {-1, 0};
    }
    return {0, 0};
  };
  const auto right_of = [](const Vec2& d) { return Vec2(-d.y(), d.x()); };
  const auto rank = [](Edge from, Edge to) {
    int r = 0;
    for (Edge e : kEdges) {
      if (e == from) continue;
      if (e == to) return r;
      ++r;
    }
    return r;
  };
  const double box = 3.2 * pitch;   // where lanes leave the approach line
  const double half = box + 2.5;    // ROI half size
  const std::array<double, 4> approach{4.0, 8.0, 12.0, 16.0};

  synth::IntersectionSpec spec;
  spec.roi.frame = Frame::ground_m;
  spec.roi.corners = {Vec2(-half, -half), Vec2(half, -half), Vec2(half, half), Vec2(-half, half)};
  spec.lateral_noise_sigma = 0.0;
  for (const MovementClass& cls : MovementClass::all()) {
    const Vec2 d_in = -outward(cls.entry());
    const Vec2 d_out = outward(cls.exit());
    const Vec2 in_base = (rank(cls.entry(), cls.exit()) + 0.5) * pitch * right_of(d_in);
    const Vec2 out_base = (rank(cls.exit(), cls.entry()) + 0.5) * pitch * right_of(d_out);
    std::vector<Vec2> lane{in_base - (half + approach[static_cast<std::size_t>(cls.entry())]) * d_in};
    const Vec2 p0 = in_base - box * d_in;
    const Vec2 p2 = out_base + box * d_out;
    if (std::abs(d_in.dot(d_out) - 1.0) < 1e-12) {
      lane.push_back(p0);
      lane.push_back(p2);
    } else {
      Eigen::Matrix2d a;
      a.col(0) = d_in;
      a.col(1) = -d_out;
      const Eigen::Vector2d st = a.colPivHouseholderQr().solve(out_base - in_base);
      const Vec2 ctrl = in_base + st(0) * d_in;
      for (int i = 0; i <= 24; ++i) {
        const double t = i / 24.0;
        lane.push_back((1 - t) * (1 - t) * p0 + 2 * (1 - t) * t * ctrl + t * t * p2);
      }
    }
    lane.push_back(out_base + (half + 4.0) * d_out);
    synth::MovementSpec m;
    m.lanes = {lane};
    spec.roi.lane_counts[cls.index()] = 1;
    spec.movements.emplace(cls.index(), std::move(m));
  }
  spec.validate();
  return spec;
}

struct Scenario {
  synth::IntersectionSpec spec;
  std::vector<pipeline::SimCamera> cameras;
  double scale_m_per_px = 0.05;
  int n_train = 300;
  int n_validation = 300;
  double spacing_camera_px = 5.0;
  double spacing_ground_m = 0.2;
  double cell_camera_px = 1.0;
  double cell_ground_m = 0.22;
};

struct Scenes {
  synth::SyntheticScene train;
  synth::SyntheticScene validation;
};

inline Scenes make_scenes(const Scenario& s, std::uint64_t seed) {
  return {synth::generate_scene(s.spec, s.n_train, derive_seed(seed, "scene/train")),
          synth::generate_scene(s.spec, s.n_validation, derive_seed(seed, "scene/validation"))};
}

inline std::vector<Track> camera_tracks(const synth::SyntheticScene& scene, const pipeline::SimCamera& cam,
                                        const synth::IntersectionSpec& spec, std::uint64_t seed) {
  std::vector<Track> out;
  for (auto& ct : synth::project_scene(scene, cam.camera, seed, &spec.roi)) out.push_back(std::move(ct.track));
  return out;
}

struct CameraRun {
  std::map<Method, classify::CountReport> train_counts;
  std::map<Method, classify::CountReport> validation_counts;
  double bandwidth = 0.0;
};

/// Calibrate, learn on the training scene and count both scenes for one camera.
inline CameraRun run_camera(const Scenario& s, const Scenes& scenes, const pipeline::SimCamera& cam,
                            std::uint64_t seed, Domain domain, std::optional<double> bandwidth,
                            const std::vector<Method>& methods) {
  const auto cal = pipeline::calibrate_sim_camera(cam, s.spec, s.scale_m_per_px, seed);
  const double spacing = domain == Domain::camera ? s.spacing_camera_px : s.spacing_ground_m;
  const auto train = pipeline::prepare_tracks(
      camera_tracks(scenes.train, cam, s.spec, derive_seed(seed, "project/train")), domain, cal, spacing);
  const auto val = pipeline::prepare_tracks(
      camera_tracks(scenes.validation, cam, s.spec, derive_seed(seed, "project/validation")), domain, cal, spacing);
  const auto roi = pipeline::roi_in_domain(pipeline::ortho_roi(s.spec, s.scale_m_per_px), domain, cal);

  pipeline::LearnSettings ls;
  ls.domain = domain;
  ls.cell = domain == Domain::camera ? s.cell_camera_px : s.cell_ground_m;
  ls.bandwidth = bandwidth;
  ls.seed = seed;
  const auto models = pipeline::learn_models(train, roi, ls);

  CameraRun run;
  run.bandwidth = models.likelihood.bandwidth;
  for (const auto& r : pipeline::count_tracks(train, methods, models, roi, cam.camera.camera_id, domain))
    run.train_counts[r.method] = r;
  for (const auto& r : pipeline::count_tracks(val, methods, models, roi, cam.camera.camera_id, domain))
    run.validation_counts[r.method] = r;
  return run;
}

}  // namespace tmc::testing
