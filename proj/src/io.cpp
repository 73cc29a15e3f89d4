#include "tmc/io.hpp"

#include "tmc/error.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace tmc::io {

namespace {

json vec_to_json(const Vec2& p) { return json::array({p.x(), p.y()}); }

Vec2 vec_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) throw Error(Errc::parse, "expected a 2D point [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

template <typename F>
auto with_parse_context(const std::string& what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(Errc::parse, what + ": " + e.what());
  }
}

void put_f32_le(std::string& buf, float v) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((bits >> (8 * i)) & 0xffu));
}

float get_f32_le(const unsigned char* p) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return std::bit_cast<float>(bits);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  return out;
}

int to_int(const std::string& s, const std::string& ctx) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(Errc::parse, ctx + ": not an integer: '" + s + "'");
  }
}

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\n')) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && s[i] == ' ') ++i;
  return s.substr(i);
}

}  // namespace

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(Errc::io, "failed writing " + path.string());
}

json read_json(const fs::path& path) {
  const std::string text = read_text(path);
  return with_parse_context(path.string(), [&] { return json::parse(text); });
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json intrinsics_to_json(const calib::Intrinsics& in) {
  return {{"fx", in.fx}, {"fy", in.fy}, {"cx", in.cx}, {"cy", in.cy}, {"k1", in.k1},
          {"k2", in.k2}, {"k3", in.k3}, {"p1", in.p1}, {"p2", in.p2}};
}

calib::Intrinsics intrinsics_from_json(const json& j) {
  return with_parse_context("intrinsics", [&] {
    calib::Intrinsics in;
    in.fx = j.value("fx", 1.0);
    in.fy = j.value("fy", 1.0);
    in.cx = j.value("cx", 0.0);
    in.cy = j.value("cy", 0.0);
    in.k1 = j.value("k1", 0.0);
    in.k2 = j.value("k2", 0.0);
    in.k3 = j.value("k3", 0.0);
    in.p1 = j.value("p1", 0.0);
    in.p2 = j.value("p2", 0.0);
    in.validate();
    return in;
  });
}

json keypoints_to_json(const std::vector<calib::PointCorrespondence>& kps) {
  json arr = json::array();
  for (const auto& k : kps) arr.push_back({{"camera", vec_to_json(k.camera_pt)}, {"ortho", vec_to_json(k.ortho_pt)}});
  return arr;
}

std::vector<calib::PointCorrespondence> keypoints_from_json(const json& j) {
  return with_parse_context("keypoints", [&] {
    if (!j.is_array()) throw Error(Errc::parse, "keypoints must be an array");
    std::vector<calib::PointCorrespondence> out;
    for (const auto& k : j) out.push_back({vec_from_json(k.at("camera")), vec_from_json(k.at("ortho"))});
    return out;
  });
}

json calibration_to_json(const Calibration& c) {
  json j;
  j["intrinsics"] = intrinsics_to_json(c.intrinsics);
  const auto h = c.homography.row_major();
  j["homography"] = json(std::vector<double>(h.begin(), h.end()));
  j["scale_m_per_px"] = c.homography.scale_m_per_px();
  j["keypoints"] = keypoints_to_json(c.keypoints);
  if (c.reprojection)
    j["reprojection"] = {{"camera_px", c.reprojection->mean_err_camera},
                         {"ortho_px", c.reprojection->mean_err_ortho},
                         {"per_point_camera_px", c.reprojection->per_point_err_camera},
                         {"per_point_ortho_px", c.reprojection->per_point_err_ortho}};
  return j;
}

Calibration calibration_from_json(const json& j) {
  return with_parse_context("calibration", [&] {
    Calibration c;
    c.intrinsics = intrinsics_from_json(j.value("intrinsics", json::object()));
    const auto h = j.at("homography").get<std::vector<double>>();
    c.homography = calib::Homography::from_row_major(h, j.at("scale_m_per_px").get<double>());
    if (j.contains("keypoints")) c.keypoints = keypoints_from_json(j.at("keypoints"));
    if (j.contains("reprojection")) {
      calib::ReprojectionStats s;
      s.mean_err_camera = j["reprojection"].at("camera_px").get<double>();
      s.mean_err_ortho = j["reprojection"].at("ortho_px").get<double>();
      s.per_point_err_camera = j["reprojection"].value("per_point_camera_px", std::vector<double>{});
      s.per_point_err_ortho = j["reprojection"].value("per_point_ortho_px", std::vector<double>{});
      c.reprojection = s;
    }
    return c;
  });
}

Calibration read_calibration(const fs::path& path) { return calibration_from_json(read_json(path)); }
void write_calibration(const fs::path& path, const Calibration& c) { write_json(path, calibration_to_json(c)); }

json roi_to_json(const RegionOfInterest& roi) {
  json j;
  j["frame"] = std::string(to_string(roi.frame));
  json corners = json::array();
  for (const auto& c : roi.corners) corners.push_back(vec_to_json(c));
  j["corners"] = corners;
  json labels = json::array();
  for (Edge e : roi.labels) labels.push_back(std::string(1, to_char(e)));
  j["edge_labels"] = labels;
  json lanes = json::object();
  for (const auto& [cls, n] : roi.lane_counts) lanes[std::to_string(cls)] = n;
  j["lane_counts"] = lanes;
  return j;
}

RegionOfInterest roi_from_json(const json& j) {
  return with_parse_context("roi", [&] {
    RegionOfInterest roi;
    roi.frame = frame_from_string(j.value("frame", std::string("ortho-px")));
    const auto& corners = j.at("corners");
    if (!corners.is_array() || corners.size() != 4) throw Error(Errc::parse, "ROI needs exactly four corners");
    for (std::size_t i = 0; i < 4; ++i) roi.corners[i] = vec_from_json(corners[i]);
    if (j.contains("edge_labels")) {
      const auto labels = j.at("edge_labels").get<std::vector<std::string>>();
      if (labels.size() != 4) throw Error(Errc::parse, "ROI needs four edge labels");
      for (std::size_t i = 0; i < 4; ++i) {
        if (labels[i].size() != 1) throw Error(Errc::parse, "edge labels are single letters");
        roi.labels[i] = edge_from_char(labels[i][0]);
      }
    }
    if (j.contains("lane_counts")) {
      for (const auto& [k, v] : j.at("lane_counts").items()) roi.lane_counts[to_int(k, "lane_counts")] = v.get<int>();
    }
    roi.validate();
    return roi;
  });
}

RegionOfInterest read_roi(const fs::path& path) { return roi_from_json(read_json(path)); }
void write_roi(const fs::path& path, const RegionOfInterest& roi) { write_json(path, roi_to_json(roi)); }

json track_to_json(const Track& t, std::optional<int> oracle_class) {
  json j;
  j["track_id"] = t.track_id;
  j["camera_id"] = t.camera_id;
  j["frame"] = std::string(to_string(t.frame));
  json pts = json::array();
  for (const auto& p : t.points) pts.push_back(vec_to_json(p));
  j["points"] = pts;
  if (!t.timestamps.empty()) j["timestamps"] = t.timestamps;
  if (!t.bboxes.empty()) {
    json bb = json::array();
    for (const auto& b : t.bboxes) bb.push_back({b.x_min, b.y_min, b.x_max, b.y_max});
    j["bboxes"] = bb;
  }
  if (oracle_class) j["oracle_class"] = *oracle_class;
  return j;
}

Track track_from_json(const json& j) {
  return with_parse_context("track", [&] {
    Track t;
    t.track_id = j.at("track_id").get<std::string>();
    t.camera_id = j.value("camera_id", std::string());
    t.frame = frame_from_string(j.value("frame", std::string("camera-px")));
    for (const auto& p : j.at("points")) t.points.push_back(vec_from_json(p));
    if (j.contains("timestamps")) t.timestamps = j.at("timestamps").get<std::vector<double>>();
    if (j.contains("bboxes")) {
      for (const auto& b : j.at("bboxes")) {
        if (!b.is_array() || b.size() != 4) throw Error(Errc::parse, "bbox must have four numbers");
        t.bboxes.push_back({b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()});
      }
    }
    return t;
  });
}

std::vector<Track> read_tracks(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open " + path.string());
  std::vector<Track> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::string ctx = path.string() + ":" + std::to_string(lineno);
    out.push_back(with_parse_context(ctx, [&] { return track_from_json(json::parse(line)); }));
  }
  return out;
}

void write_tracks(const fs::path& path, const std::vector<Track>& tracks,
                  const std::vector<std::optional<int>>& oracle_classes) {
  std::string text;
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    const auto oc = i < oracle_classes.size() ? oracle_classes[i] : std::nullopt;
    text += track_to_json(tracks[i], oc).dump();
    text += '\n';
  }
  write_text(path, text);
}

json prototypes_to_json(const proto::PrototypeSet& set) {
  json j;
  j["frame"] = std::string(to_string(set.frame));
  json classes = json::object();
  for (const auto& [cls, tracks] : set.classes) {
    json arr = json::array();
    for (const auto& t : tracks) {
      json pts = json::array();
      for (const auto& p : t.points) pts.push_back(vec_to_json(p));
      arr.push_back({{"track_id", t.track_id}, {"points", pts}});
    }
    classes[std::to_string(cls)] = arr;
  }
  j["classes"] = classes;
  j["seed"] = set.seed;
  j["feature_points"] = set.feature_points;
  return j;
}

proto::PrototypeSet prototypes_from_json(const json& j) {
  return with_parse_context("prototypes", [&] {
    proto::PrototypeSet set;
    set.frame = frame_from_string(j.at("frame").get<std::string>());
    set.seed = j.value("seed", std::uint64_t{0});
    set.feature_points = j.value("feature_points", 32);
    for (const auto& [k, arr] : j.at("classes").items()) {
      const int cls = to_int(k, "prototype class");
      MovementClass::from_index(cls);
      auto& out = set.classes[cls];
      for (const auto& p : arr) {
        Track t;
        t.track_id = p.at("track_id").get<std::string>();
        t.frame = set.frame;
        for (const auto& q : p.at("points")) t.points.push_back(vec_from_json(q));
        out.push_back(std::move(t));
      }
    }
    return set;
  });
}

proto::PrototypeSet read_prototypes(const fs::path& path) { return prototypes_from_json(read_json(path)); }
void write_prototypes(const fs::path& path, const proto::PrototypeSet& set) {
  write_json(path, prototypes_to_json(set));
}

void write_model(const fs::path& header_path, const kde::MovementLikelihoodModel& model) {
  const fs::path sidecar = fs::path(header_path).replace_extension(".bin");
  json j;
  j["frame"] = std::string(to_string(model.frame));
  j["grid"] = {{"origin", vec_to_json(model.grid.origin)},
               {"cell", model.grid.cell},
               {"width", model.grid.width},
               {"height", model.grid.height}};
  j["bandwidth"] = model.bandwidth;
  j["floor"] = model.floor_density;
  json ids = json::array();
  json counts = json::object();
  std::string payload;
  payload.reserve(model.classes.size() * model.grid.size() * 4);
  for (const auto& [cls, map] : model.classes) {
    if (!(map.grid == model.grid)) throw Error(Errc::invalid_argument, "class map grid differs from model grid");
    ids.push_back(cls);
    counts[std::to_string(cls)] = map.n_points;
    for (double d : map.density) put_f32_le(payload, static_cast<float>(d));
  }
  j["class_ids"] = ids;
  j["n_points"] = counts;
  j["payload"] = sidecar.filename().string();
  j["dtype"] = "float32-le";
  write_json(header_path, j);
  write_text(sidecar, payload);
}

kde::MovementLikelihoodModel read_model(const fs::path& header_path) {
  const json j = read_json(header_path);
  return with_parse_context(header_path.string(), [&] {
    kde::MovementLikelihoodModel model;
    model.frame = frame_from_string(j.at("frame").get<std::string>());
    const auto& g = j.at("grid");
    model.grid.origin = vec_from_json(g.at("origin"));
    model.grid.cell = g.at("cell").get<double>();
    model.grid.width = g.at("width").get<int>();
    model.grid.height = g.at("height").get<int>();
    model.grid.validate();
    model.bandwidth = j.at("bandwidth").get<double>();
    model.floor_density = j.at("floor").get<double>();
    if (j.value("dtype", std::string("float32-le")) != "float32-le") throw Error(Errc::parse, "unsupported dtype");
    const auto ids = j.at("class_ids").get<std::vector<int>>();
    const fs::path sidecar = header_path.parent_path() / j.at("payload").get<std::string>();
    const std::string payload = read_text(sidecar);
    const std::size_t cells = model.grid.size();
    if (payload.size() != ids.size() * cells * 4)
      throw Error(Errc::parse, "model payload " + sidecar.string() + " has the wrong size");
    const auto* bytes = reinterpret_cast<const unsigned char*>(payload.data());
    for (std::size_t k = 0; k < ids.size(); ++k) {
      kde::LikelihoodMap map;
      map.grid = model.grid;
      map.bandwidth = model.bandwidth;
      map.n_points = j.at("n_points").value(std::to_string(ids[k]), std::size_t{0});
      map.density.resize(cells);
      for (std::size_t i = 0; i < cells; ++i) map.density[i] = get_f32_le(bytes + 4 * (k * cells + i));
      model.classes.emplace(ids[k], std::move(map));
    }
    return model;
  });
}

std::string counts_csv_header() { return "camera_id,domain,method,class_index,count,unclassifiable_total\n"; }

std::string counts_to_csv_rows(const classify::CountReport& r) {
  std::string out;
  for (int c = 1; c <= kNumClasses; ++c) {
    out += r.camera_id + "," + std::string(classify::to_string(r.domain)) + "," +
           std::string(classify::to_string(r.method)) + "," + std::to_string(c) + "," +
           std::to_string(r.counts[static_cast<std::size_t>(c - 1)]) + "," + std::to_string(r.unclassifiable) + "\n";
  }
  return out;
}

std::vector<classify::CountReport> counts_from_csv(const std::string& text) {
  std::vector<classify::CountReport> out;
  std::istringstream in(text);
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line.rfind("camera_id", 0) == 0) continue;
    }
    const auto f = split(line, ',');
    if (f.size() != 6) throw Error(Errc::parse, "counts row needs six columns: " + line);
    const auto domain = classify::domain_from_string(f[1]);
    const auto method = classify::method_from_string(f[2]);
    if (out.empty() || out.back().camera_id != f[0] || out.back().domain != domain || out.back().method != method) {
      classify::CountReport r;
      r.camera_id = f[0];
      r.domain = domain;
      r.method = method;
      out.push_back(r);
    }
    const int cls = to_int(f[3], "class_index");
    MovementClass::from_index(cls);
    out.back().counts[static_cast<std::size_t>(cls - 1)] = to_int(f[4], "count");
    out.back().unclassifiable = to_int(f[5], "unclassifiable_total");
  }
  return out;
}

fusion::GroundTruthCounts read_ground_truth(const fs::path& path) {
  fusion::GroundTruthCounts gt;
  std::istringstream in(read_text(path));
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line.rfind("class_index", 0) == 0) continue;
    const auto f = split(line, ',');
    if (f.size() != 2) throw Error(Errc::parse, path.string() + ": ground truth rows are class_index,count");
    const int cls = to_int(f[0], path.string());
    MovementClass::from_index(cls);
    const int n = to_int(f[1], path.string());
    if (n < 0) throw Error(Errc::parse, path.string() + ": negative count");
    gt.counts[static_cast<std::size_t>(cls - 1)] = n;
  }
  return gt;
}

std::string ground_truth_to_csv(const fusion::GroundTruthCounts& gt) {
  std::string out = "class_index,count\n";
  for (int c = 1; c <= kNumClasses; ++c) out += std::to_string(c) + "," + std::to_string(gt.count(c)) + "\n";
  return out;
}

json assignment_to_json(const fusion::CameraAssignment& a) {
  json j = json::object();
  for (const auto& [cls, cam] : a) j[std::to_string(cls)] = cam;
  return j;
}

fusion::CameraAssignment assignment_from_json(const json& j) {
  return with_parse_context("assignment", [&] {
    fusion::CameraAssignment a;
    for (const auto& [k, v] : j.items()) a[to_int(k, "assignment")] = v.get<std::string>();
    return a;
  });
}

}  // namespace tmc::io
