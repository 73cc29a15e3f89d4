#pragma once

#include "tmc/fusion.hpp"
#include "tmc/geom_calib.hpp"
#include "tmc/roi.hpp"
#include "tmc/track.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace tmc::synth {

struct MovementSpec {
  std::vector<std::vector<Vec2>> lanes;  // centerline polylines in metres
  double weight = 1.0;
};

struct IntersectionSpec {
  RegionOfInterest roi;                   // ground-m frame, lane_counts filled
  std::map<int, MovementSpec> movements;  // class index -> lanes
  double lateral_noise_sigma = 1.0;       // m, stationary std of the lateral offset
  double correlation_length = 5.0;        // m
  double speed_min = 4.0, speed_max = 12.0;  // m/s
  double frame_dt = 0.1;                  // s between samples
  double mean_headway = 2.0;              // s between track starts

  void validate() const;
};

struct FourLegOptions {
  double roi_half_size = 10.0;   // m
  double lane_width = 3.5;       // m
  double turn_start = 7.0;       // distance from centre where turning paths leave the approach line
  double leg_length = 15.0;      // m of approach / departure kept outside the ROI
  double through_weight = 2.0;
  double left_weight = 1.0;
  double right_weight = 1.0;
  double sigma = 1.0;
};

/// Right-hand-traffic four-leg intersection: two inbound and two outbound
/// lanes per leg; through movements use both lanes, left turns the inner and
/// right turns the outer lane. North is -y.
IntersectionSpec four_leg_intersection(const FourLegOptions& opts = {});

struct LabeledTrack {
  Track track;
  MovementClass cls;
  int lane = 0;
};

struct CameraTrack {
  Track track;
  std::string source_id;
};

struct SyntheticScene {
  std::vector<LabeledTrack> ground_tracks;
  std::map<std::string, std::vector<CameraTrack>> camera_tracks;

  fusion::GroundTruthCounts ground_truth() const;
  std::vector<Track> ground_track_list() const;
};

/// Samples class by weight, lane uniformly, speed uniformly and lays an
/// Ornstein-Uhlenbeck lateral offset along the centerline.
SyntheticScene generate_scene(const IntersectionSpec& spec, int n_tracks, std::uint64_t seed);

struct OcclusionSector {
  Vec2 center = Vec2::Zero();
  double angle_from = 0.0;  // radians, atan2 convention in ground coordinates
  double angle_to = 0.0;
  double r_min = 0.0, r_max = 1e9;

  bool contains(const Vec2& p) const;
};

struct SyntheticCamera {
  std::string camera_id = "cam1";
  Mat3 ground_to_image = Mat3::Identity();  // metres -> undistorted px
  calib::Intrinsics intrinsics;             // distortion applied after projection
  int image_width = 0, image_height = 0;    // 0 = unbounded
  double detection_noise_px = 0.0;
  double truncation_probability = 0.0;
  double truncation_min_fraction = 0.15;
  double truncation_max_fraction = 0.45;
  bool truncate_inside_roi = false;          // cut points are drawn from inside the ROI
  std::vector<OcclusionSector> occlusions;   // detections inside are lost
  int min_fragment_points = 5;
  bool emit_bboxes = true;
  double vehicle_width_m = 1.8;

  /// Orthophoto calibration matching this camera for an orthophoto with the
  /// given ground resolution.
  calib::Homography calibration(double scale_m_per_px) const;
};

/// Ground-to-image homography of a pinhole camera at (position, height)
/// looking at a ground point.
Mat3 pinhole_ground_to_image(const Vec2& position, double height, const Vec2& look_at, double focal_px,
                             double cx, double cy);

/// Projects every ground track into the camera. Occlusions and image bounds
/// split tracks into fragments; fragments shorter than min_fragment_points
/// are discarded.
std::vector<CameraTrack> project_scene(const SyntheticScene& scene, const SyntheticCamera& cam,
                                       std::uint64_t seed, const RegionOfInterest* roi = nullptr);

/// Generator class of a ground track, or of the ground track a camera track
/// came from.
MovementClass oracle_label(const SyntheticScene& scene, const std::string& track_id);

/// Keypoint pairs for calibrating a synthetic camera: ground points visible
/// in the image with optional pixel noise on the camera side.
std::vector<calib::PointCorrespondence> synthetic_keypoints(const SyntheticCamera& cam, double scale_m_per_px,
                                                            const Box2& ground_area, int count,
                                                            double noise_px, std::uint64_t seed);

}  // namespace tmc::synth
