#include "tmc/pipeline.hpp"

#include "tmc/error.hpp"
#include "tmc/rng.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <numbers>
#include <set>

namespace tmc::pipeline {

namespace {

fs::path resolve(const fs::path& base, const io::json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return {};
  fs::path p = j[key].get<std::string>();
  return p.is_absolute() ? p : base / p;
}

std::optional<double> bandwidth_field(const io::json& j, const char* key, std::optional<double> def) {
  if (!j.contains(key)) return def;
  const auto& v = j[key];
  if (v.is_string()) {
    if (v.get<std::string>() == "auto") return std::nullopt;
    throw Error(Errc::config, std::string("kde.") + key + " must be a number or \"auto\"");
  }
  const double bw = v.get<double>();
  if (!(bw > 0)) throw Error(Errc::config, std::string("kde.") + key + " must be positive");
  return bw;
}

Vec2 json_vec(const io::json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

fs::path model_dir(const SiteConfig& cfg, const CameraConfig& cam) {
  return cfg.output_dir / cam.camera_id / std::string(classify::to_string(cfg.domain));
}

fs::path calibration_path(const SiteConfig& cfg, const CameraConfig& cam) {
  return cam.calibration.empty() ? cfg.output_dir / cam.camera_id / "calibration.json" : cam.calibration;
}

void require_cameras(const SiteConfig& cfg) {
  if (cfg.cameras.empty()) throw Error(Errc::config, "site config lists no cameras");
}

std::vector<Track> load_prepared(const SiteConfig& cfg, const CameraConfig& cam, const fs::path& tracks,
                                 const io::Calibration& cal) {
  if (tracks.empty()) throw Error(Errc::config, "camera '" + cam.camera_id + "' has no track file");
  auto raw = io::read_tracks(tracks);
  return prepare_tracks(raw, cfg.domain, cal, spacing_for(cfg, cfg.domain));
}

LearnedModels load_models(const SiteConfig& cfg, const CameraConfig& cam) {
  const fs::path dir = model_dir(cfg, cam);
  LearnedModels m;
  m.prototypes = io::read_prototypes(dir / "prototypes.json");
  m.likelihood = io::read_model(dir / "model.json");
  const Frame want = frame_for(cfg.domain);
  if (m.prototypes.frame != want || m.likelihood.frame != want)
    throw Error(Errc::frame_mismatch, "models in " + dir.string() + " were not learned in the " +
                                          std::string(classify::to_string(cfg.domain)) + " domain");
  return m;
}

fusion::GroundTruthCounts shared_ground_truth(const SiteConfig& cfg, fs::path CameraConfig::*field,
                                              const char* what) {
  std::optional<fusion::GroundTruthCounts> gt;
  for (const auto& cam : cfg.cameras) {
    if ((cam.*field).empty()) throw Error(Errc::config, "camera '" + cam.camera_id + "' has no " + what);
    auto g = io::read_ground_truth(cam.*field);
    if (gt && gt->counts != g.counts)
      throw Error(Errc::config, std::string("cameras disagree on the ") + what + " of the site");
    gt = g;
  }
  return *gt;
}

io::json mae_json(const fusion::MaeBias& m) {
  return {{"mae", m.mae}, {"bias", m.bias}, {"defined_classes", m.defined_classes}};
}

}  // namespace

const CameraConfig& SiteConfig::camera(const std::string& id) const {
  for (const auto& c : cameras)
    if (c.camera_id == id) return c;
  throw Error(Errc::missing_camera, "no camera '" + id + "' in site config");
}

SiteConfig site_config_from_json(const io::json& j, const fs::path& base) {
  try {
    SiteConfig cfg;
    cfg.base_dir = base;
    std::set<std::string> ids;
    for (const auto& c : j.value("cameras", io::json::array())) {
      CameraConfig cam;
      cam.camera_id = c.at("camera_id").get<std::string>();
      if (cam.camera_id.empty() || !ids.insert(cam.camera_id).second)
        throw Error(Errc::config, "camera ids must be unique and non-empty");
      cam.calibration = resolve(base, c, "calibration");
      cam.keypoints = resolve(base, c, "keypoints");
      if (c.contains("intrinsics")) cam.intrinsics = io::intrinsics_from_json(c["intrinsics"]);
      if (c.contains("scale_m_per_px")) cam.scale_m_per_px = c["scale_m_per_px"].get<double>();
      cam.tracks = resolve(base, c, "tracks");
      cam.train_tracks = resolve(base, c, "train_tracks");
      if (cam.train_tracks.empty()) cam.train_tracks = cam.tracks;
      cam.ground_truth = resolve(base, c, "ground_truth");
      cam.train_ground_truth = resolve(base, c, "train_ground_truth");
      cfg.cameras.push_back(std::move(cam));
    }
    cfg.roi = resolve(base, j, "roi");
    if (j.contains("domain")) cfg.domain = classify::domain_from_string(j["domain"].get<std::string>());
    if (j.contains("spacing")) {
      cfg.spacing_camera_px = j["spacing"].value("camera_px", cfg.spacing_camera_px);
      cfg.spacing_ground_m = j["spacing"].value("ground_m", cfg.spacing_ground_m);
    }
    if (!(cfg.spacing_camera_px > 0) || !(cfg.spacing_ground_m > 0))
      throw Error(Errc::config, "resampling spacings must be positive");
    if (j.contains("kde")) {
      const auto& k = j["kde"];
      cfg.kde.cell_camera_px = k.value("cell_camera_px", cfg.kde.cell_camera_px);
      cfg.kde.cell_ground_m = k.value("cell_ground_m", cfg.kde.cell_ground_m);
      cfg.kde.bandwidth_camera_px = bandwidth_field(k, "bandwidth_camera_px", cfg.kde.bandwidth_camera_px);
      cfg.kde.bandwidth_ground_m = bandwidth_field(k, "bandwidth_ground_m", cfg.kde.bandwidth_ground_m);
      cfg.kde.floor_density = k.value("floor_density", cfg.kde.floor_density);
      cfg.kde.candidates = k.value("candidates", cfg.kde.candidates);
      cfg.kde.truncation_bw = k.value("truncation_bw", cfg.kde.truncation_bw);
    }
    if (!(cfg.kde.cell_camera_px > 0) || !(cfg.kde.cell_ground_m > 0) || !(cfg.kde.floor_density > 0) ||
        cfg.kde.candidates < 1 || !(cfg.kde.truncation_bw > 0))
      throw Error(Errc::config, "kde settings out of range");
    cfg.feature_points = j.value("feature_points", cfg.feature_points);
    if (cfg.feature_points < 2) throw Error(Errc::config, "feature_points must be at least 2");
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("methods")) {
      const auto& m = j["methods"];
      if (m.is_string()) {
        cfg.methods = classify::parse_methods(m.get<std::string>());
      } else {
        cfg.methods.clear();
        for (const auto& s : m) cfg.methods.push_back(classify::method_from_string(s.get<std::string>()));
      }
    }
    if (j.contains("fusion_method"))
      cfg.fusion_method = classify::method_from_string(j["fusion_method"].get<std::string>());
    if (j.contains("output_dir")) cfg.output_dir = resolve(base, j, "output_dir");
    else cfg.output_dir = base / "out";
    cfg.simulate = j.value("simulate", io::json::object());
    cfg.ui = j.value("ui", io::json::object());
    return cfg;
  } catch (const io::json::exception& e) {
    throw Error(Errc::config, std::string("site config: ") + e.what());
  }
}

SiteConfig load_site_config(const fs::path& path) {
  if (!fs::exists(path)) throw Error(Errc::io, "config file not found: " + path.string());
  return site_config_from_json(io::read_json(path), fs::absolute(path).parent_path());
}

Frame frame_for(Domain d) { return d == Domain::camera ? Frame::camera_px : Frame::ground_m; }

double spacing_for(const SiteConfig& cfg, Domain domain) {
  return domain == Domain::camera ? cfg.spacing_camera_px : cfg.spacing_ground_m;
}

LearnSettings learn_settings(const SiteConfig& cfg, Domain domain) {
  LearnSettings s;
  s.domain = domain;
  s.cell = domain == Domain::camera ? cfg.kde.cell_camera_px : cfg.kde.cell_ground_m;
  s.bandwidth = domain == Domain::camera ? cfg.kde.bandwidth_camera_px : cfg.kde.bandwidth_ground_m;
  s.candidates = cfg.kde.candidates;
  s.floor_density = cfg.kde.floor_density;
  s.truncation_bw = cfg.kde.truncation_bw;
  s.feature_points = cfg.feature_points;
  s.seed = cfg.seed;
  return s;
}

std::vector<Track> prepare_tracks(const std::vector<Track>& raw, Domain domain, const io::Calibration& cal,
                                  double spacing) {
  std::vector<Track> mapped;
  mapped.reserve(raw.size());
  std::size_t dropped_points = 0;
  for (const auto& src : raw) {
    Track t;
    t.track_id = src.track_id;
    t.camera_id = src.camera_id;
    t.frame = frame_for(domain);
    if (src.frame == Frame::camera_px) {
      const bool boxes = src.bboxes.size() == src.points.size();
      for (std::size_t i = 0; i < src.points.size(); ++i) {
        const Vec2 det = boxes ? src.bboxes[i].bottom_midpoint() : src.points[i];
        try {
          t.points.push_back(domain == Domain::camera ? calib::undistort_point(det, cal.intrinsics)
                                                      : calib::back_project_point(det, cal.intrinsics, cal.homography));
        } catch (const Error& e) {
          if (e.code() != Errc::horizon && e.code() != Errc::non_convergence) throw;
          ++dropped_points;
          continue;
        }
        if (!src.timestamps.empty()) t.timestamps.push_back(src.timestamps[i]);
      }
    } else if (src.frame == Frame::ground_m && domain == Domain::ground) {
      t.points = src.points;
      t.timestamps = src.timestamps;
    } else if (src.frame == Frame::ortho_px && domain == Domain::ground) {
      for (const auto& p : src.points) t.points.push_back(p * cal.homography.scale_m_per_px());
      t.timestamps = src.timestamps;
    } else {
      throw Error(Errc::frame_mismatch, "track " + src.track_id + " in frame " + std::string(to_string(src.frame)) +
                                            " cannot be used in the " + std::string(classify::to_string(domain)) +
                                            " domain");
    }
    mapped.push_back(std::move(t));
  }
  if (dropped_points > 0) spdlog::warn("{} detections could not be mapped and were dropped", dropped_points);

  std::vector<Track> out;
  for (auto& t : sanitize_tracks(std::move(mapped))) out.push_back(resample_uniform(t, spacing));
  return out;
}

RegionOfInterest roi_in_domain(const RegionOfInterest& roi, Domain domain, const io::Calibration& cal) {
  const Frame want = frame_for(domain);
  if (roi.frame == want) return roi;
  if (roi.frame != Frame::ortho_px)
    throw Error(Errc::frame_mismatch, "ROI must be given in the orthophoto frame or the working frame");
  if (domain == Domain::ground) {
    const double s = cal.homography.scale_m_per_px();
    return transform_roi(roi, want, [s](const Vec2& p) { return Vec2(p * s); });
  }
  const calib::Homography inv = cal.homography.inverse();
  return transform_roi(roi, want, [&inv](const Vec2& p) { return calib::apply_homography(inv, p); });
}

LearnedModels learn_models(const std::vector<Track>& prepared, const RegionOfInterest& roi,
                           const LearnSettings& settings) {
  const Frame frame = frame_for(settings.domain);
  if (roi.frame != frame) throw Error(Errc::frame_mismatch, "ROI is not in the learning frame");

  LearnedModels m;
  m.input_tracks = prepared.size();
  std::map<int, std::vector<Track>> training;
  for (const auto& t : prepared) {
    if (t.frame != frame) throw Error(Errc::frame_mismatch, "track " + t.track_id + " is not in the learning frame");
    if (auto cls = label_training_track(t, roi)) training[cls->index()].push_back(t);
  }
  for (int c = 1; c <= kNumClasses; ++c) {
    auto it = training.find(c);
    m.training_counts[c] = it == training.end() ? 0 : static_cast<int>(it->second.size());
  }
  if (training.empty())
    throw Error(Errc::no_training_data, "none of the " + std::to_string(prepared.size()) +
                                            " tracks crosses two distinct ROI edges");

  proto::LearnOptions popts;
  popts.feature_points = settings.feature_points;
  m.prototypes = proto::learn_prototypes(training, roi, derive_seed(settings.seed, "prototypes"), popts);

  double bw = 0.0;
  if (settings.bandwidth) {
    bw = *settings.bandwidth;
  } else {
    const auto candidates = kde::geometric_candidates(settings.cell, 50.0 * settings.cell, settings.candidates);
    kde::SweepOptions sopts;
    sopts.cell = settings.cell;
    sopts.floor_density = settings.floor_density;
    sopts.kde.truncation_bw = settings.truncation_bw;
    m.sweep = kde::optimize_bandwidth(training, candidates, sopts);
    bw = m.sweep->best;
    spdlog::info("bandwidth sweep picked {:.4g} {}", bw, settings.domain == Domain::camera ? "px" : "m");
  }

  Box2 box;
  for (const auto& c : roi.corners) box.extend(c);
  for (const auto& [cls, tracks] : training)
    for (const auto& t : tracks)
      for (const auto& p : t.points) box.extend(p);
  const auto grid = kde::GridSpec::covering(box, 3.0 * bw, settings.cell);
  kde::KdeOptions kopts;
  kopts.truncation_bw = settings.truncation_bw;
  m.likelihood = kde::build_model(training, frame, bw, grid, settings.floor_density, kopts);
  return m;
}

io::json learn_summary(const LearnedModels& m, const std::string& camera_id, Domain domain) {
  io::json j;
  j["camera_id"] = camera_id;
  j["domain"] = std::string(classify::to_string(domain));
  j["input_tracks"] = m.input_tracks;
  int total = 0;
  io::json per_class = io::json::object();
  for (const auto& [c, n] : m.training_counts) {
    per_class[std::to_string(c)] = n;
    total += n;
  }
  j["training_tracks"] = total;
  j["training_tracks_per_class"] = per_class;
  io::json protos = io::json::object();
  for (const auto& [c, tracks] : m.prototypes.classes) protos[std::to_string(c)] = tracks.size();
  j["prototypes_per_class"] = protos;
  j["bandwidth"] = m.likelihood.bandwidth;
  j["grid"] = {{"cell", m.likelihood.grid.cell}, {"width", m.likelihood.grid.width}, {"height", m.likelihood.grid.height}};
  if (m.sweep) j["sweep"] = {{"candidates", m.sweep->candidates}, {"objective", m.sweep->objective}};
  return j;
}

std::vector<classify::CountReport> count_tracks(const std::vector<Track>& prepared,
                                                const std::vector<Method>& methods, const LearnedModels& models,
                                                const RegionOfInterest& roi, const std::string& camera_id,
                                                Domain domain) {
  classify::Models cm{&roi, &models.prototypes, &models.likelihood};
  std::vector<classify::CountReport> out;
  for (Method m : methods) out.push_back(classify::count_movements(prepared, m, cm, camera_id, domain));
  return out;
}

io::json metrics_json(const classify::CountReport& r, const fusion::GroundTruthCounts& gt) {
  const auto errs = fusion::per_class_error(r, gt);
  io::json per_class = io::json::array();
  for (const auto& e : errs) per_class.push_back(e ? io::json(*e) : io::json(nullptr));
  io::json j = mae_json(fusion::mae_and_bias(r, gt));
  j["per_class_error"] = per_class;
  j["unclassifiable"] = r.unclassifiable;
  return j;
}

FusionResult fuse(const std::map<std::string, classify::CountReport>& train_counts,
                  const fusion::GroundTruthCounts& train_gt,
                  const std::map<std::string, classify::CountReport>& validation_counts,
                  const fusion::GroundTruthCounts& validation_gt) {
  FusionResult f;
  fusion::ErrorMatrix errors;
  for (const auto& [cam, r] : train_counts) {
    errors[cam] = fusion::per_class_error(r, train_gt);
    f.single_train[cam] = fusion::mae_and_bias(r, train_gt);
  }
  for (const auto& [cam, r] : validation_counts) f.single_validation[cam] = fusion::mae_and_bias(r, validation_gt);
  f.assignment = fusion::assign_classes(errors);
  f.fused_train = fusion::fused_counts(train_counts, f.assignment);
  f.fused_validation = fusion::fused_counts(validation_counts, f.assignment);
  f.multi_train = fusion::mae_and_bias(f.fused_train, train_gt);
  f.multi_validation = fusion::mae_and_bias(f.fused_validation, validation_gt);
  return f;
}

io::json fusion_summary(const FusionResult& f) {
  io::json single = io::json::object();
  for (const auto& [cam, m] : f.single_train)
    single[cam] = {{"train", mae_json(m)}, {"validation", mae_json(f.single_validation.at(cam))}};
  return {{"assignment", io::assignment_to_json(f.assignment)},
          {"single", single},
          {"multi", {{"train", mae_json(f.multi_train)}, {"validation", mae_json(f.multi_validation)}}}};
}

SimCamera pole_camera(const std::string& id, const Vec2& position, double height, const Vec2& look_at,
                      double focal_px, int width, int height_px) {
  SimCamera c;
  c.camera.camera_id = id;
  const double cx = width / 2.0, cy = height_px / 2.0;
  c.camera.ground_to_image = synth::pinhole_ground_to_image(position, height, look_at, focal_px, cx, cy);
  c.camera.intrinsics.fx = c.camera.intrinsics.fy = focal_px;
  c.camera.intrinsics.cx = cx;
  c.camera.intrinsics.cy = cy;
  c.camera.image_width = width;
  c.camera.image_height = height_px;
  return c;
}

SimulationConfig simulation_from_json(const io::json& j) {
  try {
    SimulationConfig s;
    s.n_train = j.value("n_train", s.n_train);
    s.n_validation = j.value("n_validation", s.n_validation);
    s.scale_m_per_px = j.value("scale_m_per_px", s.scale_m_per_px);
    if (s.n_train < 1 || s.n_validation < 1 || !(s.scale_m_per_px > 0))
      throw Error(Errc::config, "simulate: track counts and scale must be positive");
    const auto site = j.value("site", io::json::object());
    s.site.roi_half_size = site.value("roi_half_size", s.site.roi_half_size);
    s.site.lane_width = site.value("lane_width", s.site.lane_width);
    s.site.turn_start = site.value("turn_start", s.site.turn_start);
    s.site.leg_length = site.value("leg_length", s.site.leg_length);
    s.site.through_weight = site.value("through_weight", s.site.through_weight);
    s.site.left_weight = site.value("left_weight", s.site.left_weight);
    s.site.right_weight = site.value("right_weight", s.site.right_weight);
    s.site.sigma = j.value("sigma", s.site.sigma);
    for (const auto& c : j.value("cameras", io::json::array())) {
      const auto image = c.value("image", io::json::array({1600, 900}));
      SimCamera cam = pole_camera(c.at("camera_id").get<std::string>(), json_vec(c.at("position")),
                                  c.value("height", 6.0), json_vec(c.value("look_at", io::json::array({0.0, 0.0}))),
                                  c.value("focal", 1000.0), image.at(0).get<int>(), image.at(1).get<int>());
      auto& sc = cam.camera;
      sc.intrinsics.k1 = c.value("k1", 0.0);
      sc.intrinsics.k2 = c.value("k2", 0.0);
      sc.detection_noise_px = c.value("noise_px", 0.0);
      sc.truncation_probability = c.value("truncation", 0.0);
      sc.truncate_inside_roi = c.value("truncate_inside_roi", false);
      for (const auto& o : c.value("occlusions", io::json::array())) {
        synth::OcclusionSector sec;
        sec.center = json_vec(o.at("center"));
        sec.angle_from = o.at("angle_from").get<double>();
        sec.angle_to = o.at("angle_to").get<double>();
        sec.r_min = o.value("r_min", 0.0);
        sec.r_max = o.value("r_max", 1e9);
        sc.occlusions.push_back(sec);
      }
      cam.keypoint_noise_px = c.value("keypoint_noise_px", 0.5);
      cam.keypoint_count = c.value("keypoint_count", 12);
      s.cameras.push_back(std::move(cam));
    }
    if (s.cameras.empty()) {
      auto cam = pole_camera("cam1", {-18.0, 18.0}, 8.0, {0.0, 0.0});
      cam.keypoint_noise_px = 0.5;
      s.cameras.push_back(cam);
    }
    return s;
  } catch (const io::json::exception& e) {
    throw Error(Errc::config, std::string("simulate: ") + e.what());
  }
}

io::Calibration calibrate_sim_camera(const SimCamera& cam, const synth::IntersectionSpec& spec, double scale,
                                     std::uint64_t seed) {
  Box2 area;
  for (const auto& c : spec.roi.corners) area.extend(c);
  area.min -= Vec2(8.0, 8.0);
  area.max += Vec2(8.0, 8.0);
  io::Calibration cal;
  cal.intrinsics = cam.camera.intrinsics;
  cal.keypoints = synth::synthetic_keypoints(cam.camera, scale, area, cam.keypoint_count, cam.keypoint_noise_px,
                                             derive_seed(seed, "calibrate"));
  cal.homography = calib::estimate_homography(cal.keypoints, scale);
  cal.reprojection = calib::reprojection_stats(cal.homography, cal.keypoints);
  return cal;
}

RegionOfInterest ortho_roi(const synth::IntersectionSpec& spec, double scale) {
  return transform_roi(spec.roi, Frame::ortho_px, [scale](const Vec2& p) { return Vec2(p / scale); });
}

int cmd_calibrate(const SiteConfig& cfg) {
  require_cameras(cfg);
  for (const auto& cam : cfg.cameras) {
    if (cam.keypoints.empty()) throw Error(Errc::config, "camera '" + cam.camera_id + "' has no keypoints file");
    if (!cam.scale_m_per_px) throw Error(Errc::config, "camera '" + cam.camera_id + "' needs scale_m_per_px");
    const io::json kj = io::read_json(cam.keypoints);
    io::Calibration cal;
    cal.intrinsics = cam.intrinsics;
    cal.keypoints = io::keypoints_from_json(kj.is_object() ? kj.at("keypoints") : kj);
    cal.homography = calib::estimate_homography(cal.keypoints, *cam.scale_m_per_px);
    cal.reprojection = calib::reprojection_stats(cal.homography, cal.keypoints);
    const fs::path out = calibration_path(cfg, cam);
    io::write_calibration(out, cal);
    spdlog::info("{}: {} keypoints, mean reprojection error {:.3f} px (camera) / {:.3f} px (ortho) -> {}",
                 cam.camera_id, cal.keypoints.size(), cal.reprojection->mean_err_camera,
                 cal.reprojection->mean_err_ortho, out.string());
  }
  return 0;
}

int cmd_learn(const SiteConfig& cfg) {
  require_cameras(cfg);
  if (cfg.roi.empty()) throw Error(Errc::config, "site config has no roi");
  const auto roi = io::read_roi(cfg.roi);
  for (const auto& cam : cfg.cameras) {
    const auto cal = io::read_calibration(calibration_path(cfg, cam));
    const auto prepared = load_prepared(cfg, cam, cam.train_tracks, cal);
    const auto roi_d = roi_in_domain(roi, cfg.domain, cal);
    const auto models = learn_models(prepared, roi_d, learn_settings(cfg, cfg.domain));
    const fs::path dir = model_dir(cfg, cam);
    io::write_prototypes(dir / "prototypes.json", models.prototypes);
    io::write_model(dir / "model.json", models.likelihood);
    const auto summary = learn_summary(models, cam.camera_id, cfg.domain);
    io::write_json(dir / "learn_summary.json", summary);
    spdlog::info("{}: {} of {} tracks used for training, bandwidth {:.4g} -> {}", cam.camera_id,
                 summary["training_tracks"].get<int>(), prepared.size(), models.likelihood.bandwidth, dir.string());
  }
  return 0;
}

int cmd_count(const SiteConfig& cfg) {
  require_cameras(cfg);
  if (cfg.roi.empty()) throw Error(Errc::config, "site config has no roi");
  const auto roi = io::read_roi(cfg.roi);
  const bool needs_models = std::any_of(cfg.methods.begin(), cfg.methods.end(), [](Method m) { return m != Method::ee; });
  for (const auto& cam : cfg.cameras) {
    const auto cal = io::read_calibration(calibration_path(cfg, cam));
    const auto roi_d = roi_in_domain(roi, cfg.domain, cal);
    LearnedModels models;
    if (needs_models) models = load_models(cfg, cam);
    const auto prepared = load_prepared(cfg, cam, cam.tracks, cal);
    const auto reports = count_tracks(prepared, cfg.methods, models, roi_d, cam.camera_id, cfg.domain);
    const fs::path dir = model_dir(cfg, cam);
    std::string csv = io::counts_csv_header();
    for (const auto& r : reports) csv += io::counts_to_csv_rows(r);
    io::write_text(dir / "counts.csv", csv);
    if (!cam.ground_truth.empty()) {
      const auto gt = io::read_ground_truth(cam.ground_truth);
      io::json metrics = io::json::object();
      for (const auto& r : reports) {
        metrics[std::string(classify::to_string(r.method))] = metrics_json(r, gt);
        const auto mb = fusion::mae_and_bias(r, gt);
        spdlog::info("{} {}: MAE {:.1f}% bias {:+.1f}%", cam.camera_id, classify::to_string(r.method),
                     100 * mb.mae, 100 * mb.bias);
      }
      io::write_json(dir / "metrics.json", metrics);
    }
  }
  return 0;
}

int cmd_fuse(const SiteConfig& cfg) {
  require_cameras(cfg);
  if (cfg.roi.empty()) throw Error(Errc::config, "site config has no roi");
  const auto roi = io::read_roi(cfg.roi);
  const auto train_gt = shared_ground_truth(cfg, &CameraConfig::train_ground_truth, "train_ground_truth");
  const auto val_gt = shared_ground_truth(cfg, &CameraConfig::ground_truth, "ground_truth");
  std::map<std::string, classify::CountReport> train, val;
  for (const auto& cam : cfg.cameras) {
    const auto cal = io::read_calibration(calibration_path(cfg, cam));
    const auto roi_d = roi_in_domain(roi, cfg.domain, cal);
    LearnedModels models;
    if (cfg.fusion_method != Method::ee) models = load_models(cfg, cam);
    const std::vector<Method> methods{cfg.fusion_method};
    train[cam.camera_id] =
        count_tracks(load_prepared(cfg, cam, cam.train_tracks, cal), methods, models, roi_d, cam.camera_id, cfg.domain)
            .front();
    val[cam.camera_id] =
        count_tracks(load_prepared(cfg, cam, cam.tracks, cal), methods, models, roi_d, cam.camera_id, cfg.domain)
            .front();
  }
  const auto f = fuse(train, train_gt, val, val_gt);
  const fs::path dir = cfg.output_dir / "fusion" / std::string(classify::to_string(cfg.domain));
  io::write_json(dir / "assignment.json", io::assignment_to_json(f.assignment));
  io::write_text(dir / "fused_counts.csv", io::counts_csv_header() + io::counts_to_csv_rows(f.fused_validation));
  io::json summary = fusion_summary(f);
  summary["method"] = std::string(classify::to_string(cfg.fusion_method));
  io::write_json(dir / "fusion_summary.json", summary);
  for (const auto& [cam, m] : f.single_validation) spdlog::info("single {}: validation MAE {:.1f}%", cam, 100 * m.mae);
  spdlog::info("fused: validation MAE {:.1f}% bias {:+.1f}%", 100 * f.multi_validation.mae,
               100 * f.multi_validation.bias);
  return 0;
}

int cmd_simulate(const SiteConfig& cfg) {
  const auto sim = simulation_from_json(cfg.simulate);
  const auto spec = synth::four_leg_intersection(sim.site);
  const auto train = synth::generate_scene(spec, sim.n_train, derive_seed(cfg.seed, "scene/train"));
  const auto val = synth::generate_scene(spec, sim.n_validation, derive_seed(cfg.seed, "scene/validation"));
  const fs::path out = cfg.output_dir;

  io::write_roi(out / "roi.json", ortho_roi(spec, sim.scale_m_per_px));
  io::write_text(out / "train_gt.csv", io::ground_truth_to_csv(train.ground_truth()));
  io::write_text(out / "gt.csv", io::ground_truth_to_csv(val.ground_truth()));
  const auto write_ground = [](const fs::path& p, const synth::SyntheticScene& s) {
    std::vector<Track> tracks;
    std::vector<std::optional<int>> labels;
    for (const auto& lt : s.ground_tracks) {
      tracks.push_back(lt.track);
      labels.push_back(lt.cls.index());
    }
    io::write_tracks(p, tracks, labels);
  };
  write_ground(out / "ground_train.jsonl", train);
  write_ground(out / "ground_validation.jsonl", val);

  io::json site;
  io::json cams = io::json::array();
  for (const auto& cam : sim.cameras) {
    const std::string id = cam.camera.camera_id;
    const auto cal = calibrate_sim_camera(cam, spec, sim.scale_m_per_px, cfg.seed);
    io::write_json(out / id / "keypoints.json", io::keypoints_to_json(cal.keypoints));
    io::write_calibration(out / id / "calibration.json", cal);
    const auto write_cam = [&](const fs::path& p, const synth::SyntheticScene& s, const char* stage) {
      std::vector<Track> tracks;
      std::vector<std::optional<int>> labels;
      for (const auto& ct : synth::project_scene(s, cam.camera, derive_seed(cfg.seed, stage), &spec.roi)) {
        labels.push_back(synth::oracle_label(s, ct.source_id).index());
        tracks.push_back(ct.track);
      }
      io::write_tracks(p, tracks, labels);
      spdlog::info("{}: {} camera tracks from {} vehicles -> {}", id, tracks.size(), s.ground_tracks.size(), p.string());
    };
    write_cam(out / id / "train_tracks.jsonl", train, "project/train");
    write_cam(out / id / "tracks.jsonl", val, "project/validation");
    cams.push_back({{"camera_id", id},
                    {"calibration", id + "/calibration.json"},
                    {"keypoints", id + "/keypoints.json"},
                    {"intrinsics", io::intrinsics_to_json(cam.camera.intrinsics)},
                    {"scale_m_per_px", sim.scale_m_per_px},
                    {"train_tracks", id + "/train_tracks.jsonl"},
                    {"tracks", id + "/tracks.jsonl"},
                    {"train_ground_truth", "train_gt.csv"},
                    {"ground_truth", "gt.csv"}});
  }
  site["cameras"] = cams;
  site["roi"] = "roi.json";
  site["domain"] = std::string(classify::to_string(cfg.domain));
  site["seed"] = cfg.seed;
  site["output_dir"] = "out";
  io::write_json(out / "site.json", site);
  spdlog::info("synthetic site written to {}", out.string());
  return 0;
}

}  // namespace tmc::pipeline
