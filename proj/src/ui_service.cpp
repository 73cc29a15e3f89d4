#include "tmc/ui_service.hpp"

#include "tmc/error.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

namespace tmc::ui {

namespace {

Reply json_reply(int status, const io::json& j) { return {status, j.dump() + "\n", "application/json"}; }

Reply error_reply(int status, const std::string& msg) { return json_reply(status, {{"error", msg}}); }

std::string mime_for(const fs::path& p) {
  auto ext = p.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".html") return "text/html";
  if (ext == ".js") return "text/javascript";
  if (ext == ".css") return "text/css";
  return "application/octet-stream";
}

const char* kPlaceholder =
    "<!doctype html><html><head><title>tmc calibration</title></head><body>"
    "<p>Calibration service is running. Endpoints: /images/camera, /images/ortho, "
    "/correspondences, /roi, /save.</p></body></html>\n";

}  // namespace

UiConfig ui_config_from_site(const pipeline::SiteConfig& cfg) {
  const auto& u = cfg.ui;
  if (cfg.cameras.empty()) throw Error(Errc::config, "serve-ui needs a camera entry");
  const auto& cam = u.contains("camera_id") ? cfg.camera(u["camera_id"].get<std::string>()) : cfg.cameras.front();
  const fs::path base = cfg.base_dir;
  const auto path = [&](const char* key) -> fs::path {
    if (!u.contains(key)) return {};
    fs::path p = u[key].get<std::string>();
    return p.is_absolute() ? p : base / p;
  };
  UiConfig c;
  c.camera_image = path("camera_image");
  c.ortho_image = path("ortho_image");
  c.static_dir = path("static_dir");
  for (const auto& [p, name] : {std::pair{c.camera_image, "camera_image"}, std::pair{c.ortho_image, "ortho_image"}})
    if (p.empty() || !fs::is_regular_file(p)) throw Error(Errc::config, std::string("ui.") + name + " is not a readable file");
  c.calibration_out = cam.calibration.empty() ? cfg.output_dir / cam.camera_id / "calibration.json" : cam.calibration;
  c.roi_out = cfg.roi.empty() ? cfg.output_dir / "roi.json" : cfg.roi;
  c.intrinsics = cam.intrinsics;
  if (!cam.scale_m_per_px) throw Error(Errc::config, "camera '" + cam.camera_id + "' needs scale_m_per_px");
  c.scale_m_per_px = *cam.scale_m_per_px;
  c.host = u.value("host", c.host);
  c.port = u.value("port", c.port);
  return c;
}

UiSession::UiSession(UiConfig cfg) : cfg_(std::move(cfg)) {}

Reply UiSession::get_image(const std::string& which) const {
  const fs::path& p = which == "camera" ? cfg_.camera_image : which == "ortho" ? cfg_.ortho_image : fs::path();
  if (p.empty()) return error_reply(404, "unknown image '" + which + "'");
  try {
    return {200, io::read_text(p), mime_for(p)};
  } catch (const Error& e) {
    return error_reply(404, e.what());
  }
}

io::json UiSession::solution_json() const {
  io::json j;
  j["correspondences"] = io::keypoints_to_json(corrs_);
  if (homography_ && stats_) {
    const auto h = homography_->row_major();
    j["homography"] = std::vector<double>(h.begin(), h.end());
    j["scale_m_per_px"] = homography_->scale_m_per_px();
    j["per_point_error_camera"] = stats_->per_point_err_camera;
    j["per_point_error_ortho"] = stats_->per_point_err_ortho;
    j["mean_error_camera"] = stats_->mean_err_camera;
    j["mean_error_ortho"] = stats_->mean_err_ortho;
  } else {
    j["homography"] = nullptr;
  }
  return j;
}

Reply UiSession::get_correspondences() const {
  std::lock_guard lock(mu_);
  return json_reply(200, solution_json());
}

Reply UiSession::post_correspondences(const std::string& body) {
  std::vector<calib::PointCorrespondence> corrs;
  try {
    const auto j = io::json::parse(body);
    corrs = io::keypoints_from_json(j.is_object() ? j.at("correspondences") : j);
  } catch (const std::exception& e) {
    return error_reply(400, std::string("bad request: ") + e.what());
  }
  std::lock_guard lock(mu_);
  corrs_ = corrs;
  homography_.reset();
  stats_.reset();
  if (corrs.size() < 4) return error_reply(422, "insufficient correspondences");
  try {
    homography_ = calib::estimate_homography(corrs, cfg_.scale_m_per_px);
    stats_ = calib::reprojection_stats(*homography_, corrs);
  } catch (const Error& e) {
    homography_.reset();
    return error_reply(422, to_string(e.code()));
  }
  return json_reply(200, solution_json());
}

Reply UiSession::get_roi() const {
  std::lock_guard lock(mu_);
  return json_reply(200, roi_ ? io::roi_to_json(*roi_) : io::json::object());
}

Reply UiSession::post_roi(const std::string& body) {
  RegionOfInterest roi;
  try {
    roi = io::roi_from_json(io::json::parse(body));
  } catch (const io::json::exception& e) {
    return error_reply(400, std::string("bad request: ") + e.what());
  } catch (const Error& e) {
    return error_reply(422, e.what());
  }
  if (roi.frame != Frame::ortho_px) return error_reply(422, "ROI must be drawn in the orthophoto frame");
  std::lock_guard lock(mu_);
  roi_ = roi;
  return json_reply(200, io::roi_to_json(roi));
}

Reply UiSession::save() {
  std::lock_guard save_lock(save_mu_);
  io::Calibration cal;
  RegionOfInterest roi;
  {
    std::lock_guard lock(mu_);
    if (!homography_) return error_reply(409, "no homography yet: post at least four correspondences");
    if (!roi_) return error_reply(409, "no ROI yet");
    cal.intrinsics = cfg_.intrinsics;
    cal.homography = *homography_;
    cal.keypoints = corrs_;
    cal.reprojection = stats_;
    roi = *roi_;
  }
  try {
    io::write_calibration(cfg_.calibration_out, cal);
    io::write_roi(cfg_.roi_out, roi);
  } catch (const Error& e) {
    return error_reply(500, e.what());
  }
  return json_reply(200, {{"calibration", cfg_.calibration_out.string()}, {"roi", cfg_.roi_out.string()}});
}

Reply UiSession::index() const {
  if (!cfg_.static_dir.empty()) {
    const fs::path p = cfg_.static_dir / "index.html";
    if (fs::is_regular_file(p)) return {200, io::read_text(p), "text/html"};
  }
  return {200, kPlaceholder, "text/html"};
}

void mount(httplib::Server& server, UiSession& session) {
  const auto send = [](httplib::Response& res, const Reply& r) {
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  server.Get("/", [&session, send](const httplib::Request&, httplib::Response& res) { send(res, session.index()); });
  server.Get(R"(/images/(\w+))", [&session, send](const httplib::Request& req, httplib::Response& res) {
    send(res, session.get_image(req.matches[1]));
  });
  server.Get("/correspondences", [&session, send](const httplib::Request&, httplib::Response& res) {
    send(res, session.get_correspondences());
  });
  server.Post("/correspondences", [&session, send](const httplib::Request& req, httplib::Response& res) {
    send(res, session.post_correspondences(req.body));
  });
  server.Get("/roi", [&session, send](const httplib::Request&, httplib::Response& res) { send(res, session.get_roi()); });
  server.Post("/roi", [&session, send](const httplib::Request& req, httplib::Response& res) {
    send(res, session.post_roi(req.body));
  });
  server.Post("/save", [&session, send](const httplib::Request&, httplib::Response& res) { send(res, session.save()); });
  if (!session.config().static_dir.empty()) server.set_mount_point("/static", session.config().static_dir.string());
}

int cmd_serve_ui(const pipeline::SiteConfig& cfg) {
  UiSession session(ui_config_from_site(cfg));
  httplib::Server server;
  // httplib's default adds SO_REUSEPORT, which lets a second server share a busy port
  server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });
  mount(server, session);
  const auto& c = session.config();
  if (!server.bind_to_port(c.host, c.port))
    throw Error(Errc::io, "cannot listen on " + c.host + ":" + std::to_string(c.port));
  spdlog::info("calibration service on http://{}:{}/", c.host, c.port);
  server.listen_after_bind();
  return 0;
}

}  // namespace tmc::ui
