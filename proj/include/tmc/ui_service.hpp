#pragma once

#include "tmc/io.hpp"
#include "tmc/pipeline.hpp"

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>

namespace httplib {
class Server;
}

namespace tmc::ui {

namespace fs = std::filesystem;

struct UiConfig {
  fs::path camera_image;
  fs::path ortho_image;
  fs::path static_dir;  // optional; a placeholder page is served without it
  fs::path calibration_out;
  fs::path roi_out;
  calib::Intrinsics intrinsics;
  double scale_m_per_px = 1.0;
  std::string host = "127.0.0.1";
  int port = 8080;
};

/// Reads the "ui" block of a site config plus the chosen camera's entry.
UiConfig ui_config_from_site(const pipeline::SiteConfig& cfg);

struct Reply {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

/// State behind the calibration endpoints. Handlers are safe to call from
/// several threads; save() is serialized.
class UiSession {
 public:
  explicit UiSession(UiConfig cfg);

  Reply get_image(const std::string& which) const;
  Reply get_correspondences() const;
  Reply post_correspondences(const std::string& body);
  Reply get_roi() const;
  Reply post_roi(const std::string& body);
  Reply save();
  Reply index() const;

  const UiConfig& config() const { return cfg_; }

 private:
  io::json solution_json() const;

  UiConfig cfg_;
  mutable std::mutex mu_;
  std::mutex save_mu_;
  std::vector<calib::PointCorrespondence> corrs_;
  std::optional<calib::Homography> homography_;
  std::optional<calib::ReprojectionStats> stats_;
  std::optional<RegionOfInterest> roi_;
};

/// Wires the session's handlers onto an HTTP server.
void mount(httplib::Server& server, UiSession& session);

/// Blocks serving until the process is stopped. Throws Errc::io when the
/// port cannot be bound.
int cmd_serve_ui(const pipeline::SiteConfig& cfg);

}  // namespace tmc::ui
