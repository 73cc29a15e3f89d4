#include <doctest.h>

#include "tmc/error.hpp"
#include "tmc/io.hpp"
#include "tmc/rng.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <random>

using namespace tmc;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("tmc_io_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::invalid_argument;
}

}  // namespace

TEST_CASE("calibration round trip") {
  TempDir tmp;
  io::Calibration c;
  c.intrinsics.fx = 812.5;
  c.intrinsics.fy = 790.25;
  c.intrinsics.cx = 640;
  c.intrinsics.cy = 360;
  c.intrinsics.k1 = -0.11;
  c.intrinsics.p2 = 1e-4;
  Mat3 m;
  m << 0.9, 0.1, 20, -0.05, 1.1, -7, 1e-4, 2e-4, 1;
  c.homography = calib::Homography(m, 0.05);
  c.keypoints = {{Vec2(1, 2), Vec2(3, 4)}, {Vec2(5, 6), Vec2(7, 8)}};
  c.reprojection = calib::ReprojectionStats{0.5, 0.25, {0.4, 0.6}, {0.2, 0.3}};
  const auto path = tmp.path / "sub" / "calibration.json";
  io::write_calibration(path, c);
  const auto back = io::read_calibration(path);
  CHECK(back.homography.matrix() == c.homography.matrix());
  CHECK(back.homography.scale_m_per_px() == 0.05);
  CHECK(back.intrinsics.fx == 812.5);
  CHECK(back.intrinsics.k1 == -0.11);
  CHECK(back.intrinsics.p2 == 1e-4);
  REQUIRE(back.keypoints.size() == 2);
  CHECK(back.keypoints[1].ortho_pt == Vec2(7, 8));
  REQUIRE(back.reprojection.has_value());
  CHECK(back.reprojection->per_point_err_camera == std::vector<double>{0.4, 0.6});

  io::write_calibration(tmp.path / "again.json", back);
  CHECK(io::read_text(path) == io::read_text(tmp.path / "again.json"));
}

TEST_CASE("roi round trip") {
  TempDir tmp;
  RegionOfInterest r;
  r.frame = Frame::ortho_px;
  r.corners = {Vec2(10, 10), Vec2(200, 12), Vec2(190, 180), Vec2(5, 170)};
  r.labels = {Edge::E, Edge::S, Edge::W, Edge::N};
  r.lane_counts = {{1, 1}, {2, 2}, {11, 2}};
  io::write_roi(tmp.path / "roi.json", r);
  const auto j = io::read_json(tmp.path / "roi.json");
  CHECK(j.at("frame") == "ortho-px");
  CHECK(j.at("edge_labels")[0] == "E");
  CHECK(j.at("lane_counts").at("11") == 2);
  const auto back = io::read_roi(tmp.path / "roi.json");
  CHECK(back.corners == r.corners);
  CHECK(back.labels == r.labels);
  CHECK(back.lanes(MovementClass::from_index(11)) == 2);
  CHECK(back.lane_counts.count(5) == 0);
  CHECK(back.lanes(MovementClass::from_index(5)) == 1);

  auto bad = j;
  bad["corners"] = {{0, 0}, {10, 10}, {10, 0}, {0, 10}};
  CHECK_THROWS_AS(io::roi_from_json(bad), Error);
}

TEST_CASE("track jsonl round trip") {
  TempDir tmp;
  Track a;
  a.track_id = "a1";
  a.camera_id = "cam1";
  a.frame = Frame::camera_px;
  a.points = {Vec2(0.1, 0.2), Vec2(1.0 / 3.0, 2.5)};
  a.timestamps = {0.0, 0.1};
  a.bboxes = {{-1, -2, 1, 0.2}, {0, 0, 1, 2.5}};
  Track b;
  b.track_id = "b2";
  b.camera_id = "ground";
  b.frame = Frame::ground_m;
  b.points = {Vec2(-5, 5), Vec2(5, 5), Vec2(6, 7)};
  io::write_tracks(tmp.path / "t.jsonl", {a, b}, {7, std::nullopt});
  const auto text = io::read_text(tmp.path / "t.jsonl");
  CHECK(text.find("\"oracle_class\":7") != std::string::npos);
  const auto back = io::read_tracks(tmp.path / "t.jsonl");
  REQUIRE(back.size() == 2);
  CHECK(back[0].points == a.points);
  CHECK(back[0].timestamps == a.timestamps);
  REQUIRE(back[0].bboxes.size() == 2);
  CHECK(back[0].bboxes[1].y_max == 2.5);
  CHECK(back[1].frame == Frame::ground_m);
  CHECK(back[1].timestamps.empty());

  io::write_text(tmp.path / "bad.jsonl", "{\"track_id\": \"x\", \"frame\": \"camera-px\", \"points\": [[0,0],[1,1]]}\n\nnot json\n");
  CHECK(code_of([&] { io::read_tracks(tmp.path / "bad.jsonl"); }) == Errc::parse);
  CHECK(code_of([&] { io::read_tracks(tmp.path / "missing.jsonl"); }) == Errc::io);
}

TEST_CASE("prototype round trip") {
  TempDir tmp;
  proto::PrototypeSet s;
  s.frame = Frame::ground_m;
  s.seed = 1234567890123ull;
  s.feature_points = 16;
  Track t;
  t.track_id = "p";
  t.frame = Frame::ground_m;
  t.points = {Vec2(0, 0), Vec2(1, 0.5)};
  s.classes[3] = {t};
  s.classes[4] = {};
  io::write_prototypes(tmp.path / "p.json", s);
  const auto back = io::read_prototypes(tmp.path / "p.json");
  CHECK(back.seed == s.seed);
  CHECK(back.feature_points == 16);
  REQUIRE(back.classes.at(3).size() == 1);
  CHECK(back.classes.at(3)[0].track_id == "p");
  CHECK(back.classes.at(3)[0].points == t.points);
  CHECK(back.size() == 1);
}

TEST_CASE("model header and float32 sidecar") {
  TempDir tmp;
  kde::MovementLikelihoodModel model;
  model.frame = Frame::ground_m;
  model.grid.origin = Vec2(-3.5, 2.25);
  model.grid.cell = 0.22;
  model.grid.width = 7;
  model.grid.height = 5;
  model.bandwidth = 0.81;
  model.floor_density = 1e-12;
  Rng rng(4);
  std::uniform_real_distribution<double> u(0, 0.2);
  for (int cls : {2, 11}) {
    kde::LikelihoodMap m;
    m.grid = model.grid;
    m.bandwidth = model.bandwidth;
    m.n_points = static_cast<std::size_t>(cls * 10);
    for (std::size_t i = 0; i < model.grid.size(); ++i) m.density.push_back(u(rng));
    model.classes[cls] = m;
  }
  const auto header = tmp.path / "model.json";
  io::write_model(header, model);
  const auto j = io::read_json(header);
  CHECK(j.at("payload") == "model.bin");
  CHECK(j.at("dtype") == "float32-le");
  CHECK(j.at("class_ids") == io::json::array({2, 11}));

  const auto bytes = io::read_text(tmp.path / "model.bin");
  REQUIRE(bytes.size() == 2 * model.grid.size() * 4);
  // Byte i*4..i*4+3 is the little-endian float of density i.
  std::size_t k = 0;
  for (const auto& [cls, m] : model.classes)
    for (double d : m.density) {
      const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(d));
      std::uint32_t got = 0;
      for (int b = 0; b < 4; ++b) got |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[k * 4 + b])) << (8 * b);
      CHECK(got == bits);
      ++k;
    }

  const auto back = io::read_model(header);
  CHECK(back.grid == model.grid);
  CHECK(back.bandwidth == 0.81);
  CHECK(back.classes.at(11).n_points == 110);
  for (const auto& [cls, m] : model.classes)
    for (std::size_t i = 0; i < m.density.size(); ++i)
      CHECK(back.classes.at(cls).density[i] == static_cast<double>(static_cast<float>(m.density[i])));

  io::write_model(tmp.path / "copy.json", back);
  CHECK(io::read_text(tmp.path / "copy.bin") == bytes);

  io::write_text(tmp.path / "model.bin", bytes.substr(0, 12));
  CHECK(code_of([&] { io::read_model(header); }) == Errc::parse);
}

TEST_CASE("counts csv round trip") {
  classify::CountReport r;
  r.camera_id = "cam2";
  r.domain = classify::Domain::camera;
  r.method = classify::Method::vote;
  for (int c = 0; c < kNumClasses; ++c) r.counts[static_cast<std::size_t>(c)] = c * 3;
  r.unclassifiable = 4;
  const std::string text = io::counts_csv_header() + io::counts_to_csv_rows(r);
  CHECK(text.rfind("camera_id,domain,method,class_index,count,unclassifiable_total\n", 0) == 0);
  CHECK(text.find("cam2,camera,vote,5,12,4\n") != std::string::npos);
  const auto back = io::counts_from_csv(text);
  REQUIRE(back.size() == 1);
  CHECK(back[0].counts == r.counts);
  CHECK(back[0].unclassifiable == 4);
  CHECK(back[0].method == classify::Method::vote);
  CHECK_THROWS_AS(io::counts_from_csv("cam2,camera,vote,13,1,0\n"), Error);
}

TEST_CASE("ground truth and assignment files") {
  TempDir tmp;
  fusion::GroundTruthCounts gt;
  gt.counts[0] = 5;
  gt.counts[10] = 17;
  io::write_text(tmp.path / "gt.csv", io::ground_truth_to_csv(gt));
  CHECK(io::read_ground_truth(tmp.path / "gt.csv").counts == gt.counts);
  io::write_text(tmp.path / "neg.csv", "class_index,count\n3,-1\n");
  CHECK(code_of([&] { io::read_ground_truth(tmp.path / "neg.csv"); }) == Errc::parse);

  fusion::CameraAssignment a;
  for (int c = 1; c <= kNumClasses; ++c) a[c] = c % 2 ? "cam1" : "cam3";
  const auto j = io::assignment_to_json(a);
  CHECK(j.at("2") == "cam3");
  CHECK(io::assignment_from_json(j) == a);
}

TEST_CASE("json helpers") {
  TempDir tmp;
  io::write_json(tmp.path / "a" / "b.json", io::json{{"x", 1}});
  CHECK(io::read_text(tmp.path / "a" / "b.json") == "{\n  \"x\": 1\n}\n");
  io::write_text(tmp.path / "broken.json", "{\"x\": ");
  CHECK(code_of([&] { io::read_json(tmp.path / "broken.json"); }) == Errc::parse);
  CHECK(code_of([&] { io::read_json(tmp.path / "nope.json"); }) == Errc::io);
}
