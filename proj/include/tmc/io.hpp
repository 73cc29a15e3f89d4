#pragma once

#include "tmc/classify.hpp"
#include "tmc/fusion.hpp"
#include "tmc/geom_calib.hpp"
#include "tmc/kde.hpp"
#include "tmc/prototypes.hpp"
#include "tmc/roi.hpp"
#include "tmc/track.hpp"

#include "json.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace tmc::io {

namespace fs = std::filesystem;
using nlohmann::json;

json read_json(const fs::path& path);
/// Pretty-printed with a trailing newline; parent directories are created.
void write_json(const fs::path& path, const json& j);
std::string read_text(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);

struct Calibration {
  calib::Intrinsics intrinsics;
  calib::Homography homography = calib::Homography::identity();
  std::vector<calib::PointCorrespondence> keypoints;
  std::optional<calib::ReprojectionStats> reprojection;
};

json intrinsics_to_json(const calib::Intrinsics& in);
calib::Intrinsics intrinsics_from_json(const json& j);
json keypoints_to_json(const std::vector<calib::PointCorrespondence>& kps);
std::vector<calib::PointCorrespondence> keypoints_from_json(const json& j);

json calibration_to_json(const Calibration& c);
Calibration calibration_from_json(const json& j);
Calibration read_calibration(const fs::path& path);
void write_calibration(const fs::path& path, const Calibration& c);

json roi_to_json(const RegionOfInterest& roi);
RegionOfInterest roi_from_json(const json& j);
RegionOfInterest read_roi(const fs::path& path);
void write_roi(const fs::path& path, const RegionOfInterest& roi);

json track_to_json(const Track& t, std::optional<int> oracle_class = std::nullopt);
Track track_from_json(const json& j);
/// One JSON object per line; blank lines are skipped.
std::vector<Track> read_tracks(const fs::path& path);
void write_tracks(const fs::path& path, const std::vector<Track>& tracks,
                  const std::vector<std::optional<int>>& oracle_classes = {});

json prototypes_to_json(const proto::PrototypeSet& set);
proto::PrototypeSet prototypes_from_json(const json& j);
proto::PrototypeSet read_prototypes(const fs::path& path);
void write_prototypes(const fs::path& path, const proto::PrototypeSet& set);

/// JSON header plus a float32 little-endian sidecar holding each class's
/// density grid row-major, classes in header order. The sidecar sits next to
/// the header as <stem>.bin.
void write_model(const fs::path& header_path, const kde::MovementLikelihoodModel& model);
kde::MovementLikelihoodModel read_model(const fs::path& header_path);

std::string counts_csv_header();
std::string counts_to_csv_rows(const classify::CountReport& r);
std::vector<classify::CountReport> counts_from_csv(const std::string& text);

fusion::GroundTruthCounts read_ground_truth(const fs::path& path);
std::string ground_truth_to_csv(const fusion::GroundTruthCounts& gt);

json assignment_to_json(const fusion::CameraAssignment& a);
fusion::CameraAssignment assignment_from_json(const json& j);

}  // namespace tmc::io
