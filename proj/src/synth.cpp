#include "tmc/synth.hpp"

#include "tmc/error.hpp"
#include "tmc/rng.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <numbers>

namespace tmc::synth {

namespace {

Vec2 outward(Edge e) {
  switch (e) {
    case Edge::N: return {0, -1};
    case Edge::E: return {1, 0};
    case Edge::S: return {0, 1};
    case Edge::W: return {-1, 0};
  }
  return {0, 0};
}

Vec2 right_of(const Vec2& d) { return {-d.y(), d.x()}; }

Edge edge_facing(const Vec2& dir) {
  for (Edge e : kEdges)
    if (outward(e).dot(dir) > 0.5) return e;
  throw Error(Errc::invalid_argument, "direction is not axis aligned");
}

std::vector<Vec2> movement_centerline(Edge entry, Edge exit, int lane, const FourLegOptions& o) {
  const Vec2 d_in = -outward(entry);
  const Vec2 d_out = outward(exit);
  const double off = (lane + 0.5) * o.lane_width;
  const Vec2 in_base = off * right_of(d_in);
  const Vec2 out_base = off * right_of(d_out);
  const double far = o.roi_half_size + o.leg_length;

  std::vector<Vec2> pts;
  pts.push_back(in_base - far * d_in);
  const Vec2 p0 = in_base - o.turn_start * d_in;
  const Vec2 p2 = out_base + o.turn_start * d_out;
  if (std::abs(d_in.dot(d_out) - 1.0) < 1e-12) {
    pts.push_back(p0);
    pts.push_back(p2);
  } else {
    // Quadratic Bezier through the crossing point of the two lane lines.
    Eigen::Matrix2d a;
    a.col(0) = d_in;
    a.col(1) = -d_out;
    const Eigen::Vector2d st = a.colPivHouseholderQr().solve(out_base - in_base);
    const Vec2 ctrl = in_base + st(0) * d_in;
    constexpr int kSteps = 24;
    for (int i = 0; i <= kSteps; ++i) {
      const double t = static_cast<double>(i) / kSteps;
      pts.push_back((1 - t) * (1 - t) * p0 + 2 * (1 - t) * t * ctrl + t * t * p2);
    }
  }
  pts.push_back(out_base + far * d_out);
  return pts;
}

struct PolylineWalker {
  const std::vector<Vec2>& pts;
  std::vector<double> cum;

  explicit PolylineWalker(const std::vector<Vec2>& p) : pts(p) {
    cum.push_back(0.0);
    for (std::size_t i = 1; i < pts.size(); ++i) cum.push_back(cum.back() + (pts[i] - pts[i - 1]).norm());
  }
  double length() const { return cum.back(); }

  // Position and unit normal at arc length s.
  std::pair<Vec2, Vec2> at(double s) const {
    std::size_t i = 1;
    while (i + 1 < pts.size() && cum[i] < s) ++i;
    const double len = cum[i] - cum[i - 1];
    const double f = len > 0.0 ? std::clamp((s - cum[i - 1]) / len, 0.0, 1.0) : 0.0;
    const Vec2 d = (pts[i] - pts[i - 1]).normalized();
    return {pts[i - 1] + f * (pts[i] - pts[i - 1]), right_of(d)};
  }
};

std::string format_id(const char* prefix, int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%05d", prefix, i);
  return buf;
}

}  // namespace

void IntersectionSpec::validate() const {
  roi.validate();
  if (!(lateral_noise_sigma >= 0.0)) throw Error(Errc::config, "lateral noise sigma must be non-negative");
  if (!(correlation_length > 0.0)) throw Error(Errc::config, "correlation length must be positive");
  if (!(speed_min > 0.0) || speed_max < speed_min) throw Error(Errc::config, "bad speed range");
  if (!(frame_dt > 0.0)) throw Error(Errc::config, "frame interval must be positive");
  bool any = false;
  for (const auto& [cls, m] : movements) {
    if (cls < 1 || cls > kNumClasses) throw Error(Errc::config, "movement for unknown class");
    if (m.weight < 0.0) throw Error(Errc::config, "movement weights must be non-negative");
    if (m.weight > 0.0 && m.lanes.empty())
      throw Error(Errc::config, "class " + std::to_string(cls) + " has weight but no centerline");
    for (const auto& lane : m.lanes)
      if (lane.size() < 2) throw Error(Errc::config, "centerlines need two or more points");
    any = any || m.weight > 0.0;
  }
  if (!any) throw Error(Errc::config, "no movement has positive weight");
}

IntersectionSpec four_leg_intersection(const FourLegOptions& o) {
  IntersectionSpec spec;
  const double r = o.roi_half_size;
  spec.roi.frame = Frame::ground_m;
  spec.roi.corners = {Vec2(-r, -r), Vec2(r, -r), Vec2(r, r), Vec2(-r, r)};
  spec.lateral_noise_sigma = o.sigma;
  for (const MovementClass& cls : MovementClass::all()) {
    const Vec2 d_in = -outward(cls.entry());
    const Edge through = edge_facing(d_in);
    const Edge right = edge_facing(right_of(d_in));
    MovementSpec m;
    if (cls.exit() == through) {
      m.weight = o.through_weight;
      m.lanes = {movement_centerline(cls.entry(), cls.exit(), 0, o),
                 movement_centerline(cls.entry(), cls.exit(), 1, o)};
    } else if (cls.exit() == right) {
      m.weight = o.right_weight;
      m.lanes = {movement_centerline(cls.entry(), cls.exit(), 1, o)};
    } else {
      m.weight = o.left_weight;
      m.lanes = {movement_centerline(cls.entry(), cls.exit(), 0, o)};
    }
    spec.roi.lane_counts[cls.index()] = static_cast<int>(m.lanes.size());
    spec.movements.emplace(cls.index(), std::move(m));
  }
  spec.validate();
  return spec;
}

fusion::GroundTruthCounts SyntheticScene::ground_truth() const {
  fusion::GroundTruthCounts gt;
  for (const auto& t : ground_tracks) ++gt.counts[static_cast<std::size_t>(t.cls.index() - 1)];
  return gt;
}

std::vector<Track> SyntheticScene::ground_track_list() const {
  std::vector<Track> out;
  out.reserve(ground_tracks.size());
  for (const auto& t : ground_tracks) out.push_back(t.track);
  return out;
}

SyntheticScene generate_scene(const IntersectionSpec& spec, int n_tracks, std::uint64_t seed) {
  spec.validate();
  if (n_tracks < 1) throw Error(Errc::invalid_argument, "n_tracks must be positive");
  Rng rng(seed);
  std::vector<int> classes;
  std::vector<double> weights;
  for (const auto& [cls, m] : spec.movements) {
    if (m.weight <= 0.0) continue;
    classes.push_back(cls);
    weights.push_back(m.weight);
  }
  std::discrete_distribution<std::size_t> pick_class(weights.begin(), weights.end());
  std::uniform_real_distribution<double> pick_speed(spec.speed_min, spec.speed_max);
  std::exponential_distribution<double> headway(1.0 / spec.mean_headway);
  std::normal_distribution<double> gauss(0.0, 1.0);

  SyntheticScene scene;
  scene.ground_tracks.reserve(static_cast<std::size_t>(n_tracks));
  double t0 = 0.0;
  for (int i = 0; i < n_tracks; ++i) {
    const int cls = classes[pick_class(rng)];
    const auto& m = spec.movements.at(cls);
    const int lane = std::uniform_int_distribution<int>(0, static_cast<int>(m.lanes.size()) - 1)(rng);
    const double speed = pick_speed(rng);
    t0 += headway(rng);

    const PolylineWalker walk(m.lanes[static_cast<std::size_t>(lane)]);
    const double ds = speed * spec.frame_dt;
    const double a = std::exp(-ds / spec.correlation_length);
    const double innov = spec.lateral_noise_sigma * std::sqrt(1.0 - a * a);
    double u = spec.lateral_noise_sigma * gauss(rng);

    LabeledTrack lt{Track{}, MovementClass::from_index(cls), lane};
    lt.track.track_id = format_id("g", i);
    lt.track.camera_id = "ground";
    lt.track.frame = Frame::ground_m;
    const auto n_steps = static_cast<int>(std::ceil(walk.length() / ds));
    for (int k = 0; k <= n_steps; ++k) {
      const double s = std::min(k * ds, walk.length());
      const auto [pos, normal] = walk.at(s);
      lt.track.points.push_back(pos + u * normal);
      lt.track.timestamps.push_back(t0 + s / speed);
      u = a * u + innov * gauss(rng);
    }
    scene.ground_tracks.push_back(std::move(lt));
  }
  return scene;
}

bool OcclusionSector::contains(const Vec2& p) const {
  const Vec2 d = p - center;
  const double r = d.norm();
  if (r < r_min || r > r_max) return false;
  const double two_pi = 2.0 * std::numbers::pi;
  const double span = std::fmod(std::fmod(angle_to - angle_from, two_pi) + two_pi, two_pi);
  const double rel = std::fmod(std::fmod(std::atan2(d.y(), d.x()) - angle_from, two_pi) + two_pi, two_pi);
  return rel <= span;
}

Mat3 pinhole_ground_to_image(const Vec2& position, double height, const Vec2& look_at, double focal_px,
                             double cx, double cy) {
  const Eigen::Vector3d c(position.x(), position.y(), height);
  const Eigen::Vector3d target(look_at.x(), look_at.y(), 0.0);
  const Eigen::Vector3d fwd = (target - c).normalized();
  const Eigen::Vector3d rx = fwd.cross(Eigen::Vector3d::UnitZ()).normalized();
  const Eigen::Vector3d ry = fwd.cross(rx);
  Eigen::Matrix3d r;
  r.row(0) = rx;
  r.row(1) = ry;
  r.row(2) = fwd;
  Eigen::Matrix3d k;
  k << focal_px, 0, cx, 0, focal_px, cy, 0, 0, 1;
  Eigen::Matrix3d rt;
  rt.col(0) = r.col(0);
  rt.col(1) = r.col(1);
  rt.col(2) = -r * c;
  return k * rt;
}

calib::Homography SyntheticCamera::calibration(double scale_m_per_px) const {
  Mat3 s = Mat3::Identity();
  s(0, 0) = s(1, 1) = scale_m_per_px;
  return calib::Homography((ground_to_image * s).inverse(), scale_m_per_px);
}

std::vector<CameraTrack> project_scene(const SyntheticScene& scene, const SyntheticCamera& cam,
                                       std::uint64_t seed, const RegionOfInterest* roi) {
  Rng rng(derive_seed(seed, "project/" + cam.camera_id));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<CameraTrack> out;
  int next_id = 0;

  for (const auto& lt : scene.ground_tracks) {
    const auto& src = lt.track;
    std::size_t lo = 0, hi = src.points.size();  // kept range [lo, hi)
    if (unit(rng) < cam.truncation_probability) {
      const double mode = unit(rng);
      const bool cut_front = mode < 1.0 / 3.0 || mode >= 2.0 / 3.0;
      const bool cut_back = mode >= 1.0 / 3.0;
      const double span = cam.truncation_max_fraction - cam.truncation_min_fraction;
      if (cam.truncate_inside_roi && roi) {
        std::vector<std::size_t> inside;
        for (std::size_t i = 0; i < src.points.size(); ++i)
          if (roi->contains(src.points[i])) inside.push_back(i);
        if (!inside.empty()) {
          const std::size_t mid = inside.size() / 2;
          const auto pick = [&](std::size_t a, std::size_t b) {
            return inside[a + static_cast<std::size_t>(unit(rng) * static_cast<double>(b - a))];
          };
          if (cut_front) lo = cut_back ? pick(0, std::max<std::size_t>(mid, 1)) : pick(0, inside.size());
          if (cut_back) hi = 1 + (cut_front ? pick(mid, inside.size()) : pick(0, inside.size()));
        }
      } else {
        const auto n = static_cast<double>(src.points.size());
        if (cut_front) lo = static_cast<std::size_t>(n * (cam.truncation_min_fraction + span * unit(rng)));
        if (cut_back) hi -= static_cast<std::size_t>(n * (cam.truncation_min_fraction + span * unit(rng)));
      }
    }

    Track frag;
    const auto flush = [&]() {
      if (static_cast<int>(frag.points.size()) >= cam.min_fragment_points) {
        frag.track_id = cam.camera_id + "_" + format_id("t", next_id++);
        frag.camera_id = cam.camera_id;
        frag.frame = Frame::camera_px;
        out.push_back({std::move(frag), src.track_id});
      }
      frag = Track{};
    };
    for (std::size_t i = lo; i < hi; ++i) {
      const Vec2& g = src.points[i];
      bool visible = true;
      for (const auto& occ : cam.occlusions)
        if (occ.contains(g)) visible = false;
      const Eigen::Vector3d q = cam.ground_to_image * g.homogeneous();
      if (!(q.z() > 1e-9)) visible = false;
      Vec2 px;
      if (visible) {
        px = calib::distort_point(q.hnormalized(), cam.intrinsics);
        px += cam.detection_noise_px * Vec2(gauss(rng), gauss(rng));
        if (cam.image_width > 0 && (px.x() < 0 || px.x() >= cam.image_width)) visible = false;
        if (cam.image_height > 0 && (px.y() < 0 || px.y() >= cam.image_height)) visible = false;
      }
      if (!visible) {
        flush();
        continue;
      }
      frag.points.push_back(px);
      if (!src.timestamps.empty()) frag.timestamps.push_back(src.timestamps[i]);
      if (cam.emit_bboxes) {
        const Eigen::Vector3d q2 = cam.ground_to_image * (g + Vec2(cam.vehicle_width_m, 0)).homogeneous();
        double w = 2.0;
        if (q2.z() > 1e-9) w = std::max(2.0, (q2.hnormalized() - q.hnormalized()).norm());
        const double h = 0.75 * w;
        frag.bboxes.push_back({px.x() - w / 2, px.y() - h, px.x() + w / 2, px.y()});
      }
    }
    flush();
  }
  return out;
}

MovementClass oracle_label(const SyntheticScene& scene, const std::string& track_id) {
  for (const auto& t : scene.ground_tracks)
    if (t.track.track_id == track_id) return t.cls;
  for (const auto& [cam, tracks] : scene.camera_tracks)
    for (const auto& ct : tracks)
      if (ct.track.track_id == track_id) return oracle_label(scene, ct.source_id);
  throw Error(Errc::invalid_argument, "unknown track id '" + track_id + "'");
}

std::vector<calib::PointCorrespondence> synthetic_keypoints(const SyntheticCamera& cam, double scale_m_per_px,
                                                            const Box2& ground_area, int count,
                                                            double noise_px, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "keypoints/" + cam.camera_id));
  std::uniform_real_distribution<double> ux(ground_area.min.x(), ground_area.max.x());
  std::uniform_real_distribution<double> uy(ground_area.min.y(), ground_area.max.y());
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<calib::PointCorrespondence> out;
  for (int attempt = 0; static_cast<int>(out.size()) < count && attempt < 100 * count; ++attempt) {
    const Vec2 g(ux(rng), uy(rng));
    const Eigen::Vector3d q = cam.ground_to_image * g.homogeneous();
    if (!(q.z() > 1e-9)) continue;
    const Vec2 px = q.hnormalized();
    if (cam.image_width > 0 && (px.x() < 0 || px.x() >= cam.image_width)) continue;
    if (cam.image_height > 0 && (px.y() < 0 || px.y() >= cam.image_height)) continue;
    out.push_back({px + noise_px * Vec2(gauss(rng), gauss(rng)), g / scale_m_per_px});
  }
  return out;
}

}  // namespace tmc::synth
