#pragma once

#include "tmc/classify.hpp"
#include "tmc/fusion.hpp"
#include "tmc/io.hpp"
#include "tmc/kde.hpp"
#include "tmc/prototypes.hpp"
#include "tmc/roi.hpp"
#include "tmc/synth.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tmc::pipeline {

namespace fs = std::filesystem;
using classify::Domain;
using classify::Method;

struct CameraConfig {
  std::string camera_id;
  fs::path calibration;  // written by calibrate, read by everything else
  fs::path keypoints;    // calibrate input: [{"camera":[x,y],"ortho":[x,y]}, ...]
  calib::Intrinsics intrinsics;
  std::optional<double> scale_m_per_px;
  fs::path train_tracks;  // defaults to tracks when empty
  fs::path tracks;
  fs::path train_ground_truth;
  fs::path ground_truth;
};

struct KdeConfig {
  double cell_camera_px = 1.0;
  double cell_ground_m = 0.22;
  std::optional<double> bandwidth_camera_px = 9.7;  // nullopt = sweep
  std::optional<double> bandwidth_ground_m = 3.36;
  double floor_density = 1e-12;
  int candidates = 16;
  double truncation_bw = 5.0;
};

struct SiteConfig {
  std::vector<CameraConfig> cameras;
  fs::path roi;
  Domain domain = Domain::ground;
  double spacing_camera_px = 5.0;
  double spacing_ground_m = 0.2;
  KdeConfig kde;
  int feature_points = 32;
  std::uint64_t seed = 0;
  std::vector<Method> methods{classify::kAllMethods.begin(), classify::kAllMethods.end()};
  Method fusion_method = Method::ml;
  fs::path output_dir = "out";
  io::json simulate;  // only read by the simulate command
  io::json ui;        // only read by serve-ui
  fs::path base_dir;  // directory of the config file

  const CameraConfig& camera(const std::string& id) const;
};

/// Relative paths are resolved against base_dir.
SiteConfig site_config_from_json(const io::json& j, const fs::path& base_dir);
SiteConfig load_site_config(const fs::path& path);

Frame frame_for(Domain d);

/// Camera domain: undistorted detection points (bbox bottom midpoints when
/// boxes are present). Ground domain: back-projected to metres. Either way
/// the result is sanitized and resampled at the given spacing.
std::vector<Track> prepare_tracks(const std::vector<Track>& raw, Domain domain, const io::Calibration& cal,
                                  double spacing);

/// Moves an orthophoto ROI into the working frame of the domain.
RegionOfInterest roi_in_domain(const RegionOfInterest& roi, Domain domain, const io::Calibration& cal);

struct LearnSettings {
  Domain domain = Domain::ground;
  double cell = 0.22;
  std::optional<double> bandwidth;  // nullopt = sweep
  int candidates = 16;
  double floor_density = 1e-12;
  double truncation_bw = 5.0;
  int feature_points = 32;
  std::uint64_t seed = 0;
};

LearnSettings learn_settings(const SiteConfig& cfg, Domain domain);
double spacing_for(const SiteConfig& cfg, Domain domain);

struct LearnedModels {
  proto::PrototypeSet prototypes;
  kde::MovementLikelihoodModel likelihood;
  std::map<int, int> training_counts;  // every class index, zero included
  std::size_t input_tracks = 0;
  std::optional<kde::BandwidthSweep> sweep;
};

/// Labels prepared tracks by their ROI crossings and fits prototypes and
/// likelihood maps. Ground truth is never consulted.
LearnedModels learn_models(const std::vector<Track>& prepared, const RegionOfInterest& roi,
                           const LearnSettings& settings);

io::json learn_summary(const LearnedModels& m, const std::string& camera_id, Domain domain);

std::vector<classify::CountReport> count_tracks(const std::vector<Track>& prepared,
                                                const std::vector<Method>& methods, const LearnedModels& models,
                                                const RegionOfInterest& roi, const std::string& camera_id,
                                                Domain domain);

io::json metrics_json(const classify::CountReport& r, const fusion::GroundTruthCounts& gt);

struct FusionResult {
  fusion::CameraAssignment assignment;
  classify::CountReport fused_train;
  classify::CountReport fused_validation;
  std::map<std::string, fusion::MaeBias> single_train;
  std::map<std::string, fusion::MaeBias> single_validation;
  fusion::MaeBias multi_train;
  fusion::MaeBias multi_validation;
};

FusionResult fuse(const std::map<std::string, classify::CountReport>& train_counts,
                  const fusion::GroundTruthCounts& train_gt,
                  const std::map<std::string, classify::CountReport>& validation_counts,
                  const fusion::GroundTruthCounts& validation_gt);

io::json fusion_summary(const FusionResult& f);

// Synthetic site used by the simulate command and the statistical tests.
struct SimCamera {
  synth::SyntheticCamera camera;
  double keypoint_noise_px = 0.0;
  int keypoint_count = 12;
};

struct SimulationConfig {
  synth::FourLegOptions site;
  int n_train = 300;
  int n_validation = 300;
  double scale_m_per_px = 0.05;
  std::vector<SimCamera> cameras;
};

SimulationConfig simulation_from_json(const io::json& j);

/// Camera on a pole at the given height, looking at ground point look_at.
SimCamera pole_camera(const std::string& id, const Vec2& position, double height, const Vec2& look_at,
                      double focal_px = 1000.0, int width = 1600, int height_px = 900);

/// Calibration a site operator would produce for this camera: DLT on
/// synthetic keypoints with the configured click noise.
io::Calibration calibrate_sim_camera(const SimCamera& cam, const synth::IntersectionSpec& spec, double scale,
                                     std::uint64_t seed);

/// ROI of the synthetic site in orthophoto pixels.
RegionOfInterest ortho_roi(const synth::IntersectionSpec& spec, double scale);

int cmd_calibrate(const SiteConfig& cfg);
int cmd_learn(const SiteConfig& cfg);
int cmd_count(const SiteConfig& cfg);
int cmd_fuse(const SiteConfig& cfg);
/// Writes a synthetic site (ROI, calibrations, tracks, ground truth and a
/// ready-to-run site.json) into output_dir.
int cmd_simulate(const SiteConfig& cfg);

}  // namespace tmc::pipeline
