// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "support/homographies.hpp"
#include "support/scenarios.hpp"
#include "support/camera_fixture.hpp"
#include "tmc/classify.hpp"
#include "tmc/error.hpp"
#include "tmc/fusion.hpp"
#include "tmc/kde.hpp"
#include "tmc/pipeline.hpp"
#include "tmc/rng.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

using namespace tmc;
using namespace tmc::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  double time_limit_s;
  std::function<Outcome()> run;
};

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Pole camera on the north-west diagonal, settings shared by the domain and method comparisons.
constexpr double kCameraBandwidthPx = 8.06;
constexpr double kGroundBandwidthM = 0.81;
constexpr int kStatSeeds = 25;

Outcome homography_suite() {
  int exact_ok = 0;
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Mat3 truth = random_homography(rng);
    const auto h = calib::estimate_homography(grid_correspondences(truth, trial % 2 ? 4 : 6));
    exact_ok += (h.matrix() - normalized(truth)).cwiseAbs().maxCoeff() < 1e-6;
  }

  const double sigma = 2.0;
  int in_band = 0;
  for (int seed = 0; seed < 100; ++seed) {
    Rng r(derive_seed(static_cast<std::uint64_t>(seed), "noise"));
    std::normal_distribution<double> g(0.0, sigma);
    auto corrs = grid_correspondences(random_homography(r), 5);
    for (auto& c : corrs) c.ortho_pt += Vec2(g(r), g(r));
    const auto stats = calib::reprojection_stats(calib::estimate_homography(corrs), corrs);
    in_band += stats.mean_err_ortho >= sigma / 2 && stats.mean_err_ortho <= 2 * sigma;
  }

  double worst_inv = 0.0;
  Rng ri(21);
  std::uniform_real_distribution<double> u(0.0, 1000.0);
  for (int trial = 0; trial < 20; ++trial) {
    const calib::Homography h(random_homography(ri), 0.1);
    const auto inv = h.inverse();
    for (int k = 0; k < 50; ++k) {
      const Vec2 p(u(ri), u(ri));
      worst_inv = std::max(worst_inv, (calib::apply_homography(inv, calib::apply_homography(h, p)) - p).norm());
    }
  }
  return {exact_ok == 50 && in_band == 100 && worst_inv < 1e-9,
          fmt("exact %d/50, noisy in [s/2,2s] %d/100, inverse round trip %.1e", exact_ok, in_band, worst_inv)};
}

kde::GridSpec grid(Vec2 origin, double cell, int w, int h) {
  kde::GridSpec g;
  g.origin = origin;
  g.cell = cell;
  g.width = w;
  g.height = h;
  return g;
}

Outcome kde_suite() {
  const double two_pi = 2.0 * std::numbers::pi;
  Rng rng(31);
  double worst_rel = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const double bw = 0.6 + 0.5 * trial;
    std::uniform_real_distribution<double> u(0.0, 30.0);
    std::vector<Vec2> pts;
    for (int i = 0; i < 300 + 100 * trial; ++i) pts.emplace_back(u(rng), u(rng));
    const auto g = grid(Vec2(-5, -5), 0.4 + 0.05 * trial, 100, 100);
    const auto m = kde::build_kde_map(std::span<const Vec2>(pts), bw, g);
    double worst = 0.0, peak = 0.0;
    for (int r = 0; r < g.height; ++r)
      for (int c = 0; c < g.width; ++c) {
        const Vec2 x = g.cell_center(c, r);
        double want = 0.0;
        for (const auto& p : pts) want += std::exp(-(x - p).squaredNorm() / (2 * bw * bw));
        want /= static_cast<double>(pts.size()) * two_pi * bw * bw;
        worst = std::max(worst, std::abs(m.at(c, r) - want));
        peak = std::max(peak, want);
      }
    worst_rel = std::max(worst_rel, worst / peak);
  }

  bool peak_exact = true;
  for (double bw : {0.5, 1.0, 2.5, 9.7}) {
    const auto g = grid(Vec2(0, 0), bw / 3, 31, 31);
    const std::vector<Vec2> p{g.cell_center(15, 15)};
    const auto m = kde::build_kde_map(std::span<const Vec2>(p), bw, g);
    peak_exact = peak_exact && m.at(15, 15) == 1.0 / (two_pi * bw * bw);
  }

  double min_mass = 2.0, max_mass = 0.0;
  for (double bw : {0.5, 1.0, 2.0}) {
    std::uniform_real_distribution<double> u(3 * bw, 20.0 - 3 * bw);
    std::vector<Vec2> pts;
    for (int i = 0; i < 50; ++i) pts.emplace_back(u(rng), u(rng));
    const int n = static_cast<int>(std::ceil(80 / bw));
    const double mass = kde::build_kde_map(std::span<const Vec2>(pts), bw, grid(Vec2(0, 0), bw / 4, n, n)).mass();
    min_mass = std::min(min_mass, mass);
    max_mass = std::max(max_mass, mass);
  }
  return {worst_rel < 1e-4 && peak_exact && min_mass >= 0.99 && max_mass <= 1.0 + 1e-12,
          fmt("max relative deviation %.2e, peak exact %s, mass in [%.5f, %.5f]", worst_rel, peak_exact ? "yes" : "no",
              min_mass, max_mass)};
}

Outcome bandwidth_sweep() {
  synth::FourLegOptions fo;
  fo.sigma = 1.0;
  const auto spec = synth::four_leg_intersection(fo);
  const auto cands = kde::geometric_candidates(0.22, 50 * 0.22, 16);
  int inside = 0;
  std::ostringstream picks;
  for (int i = 0; i < 20; ++i) {
    const auto scene = synth::generate_scene(spec, 200, derive_seed(static_cast<std::uint64_t>(3000 + i), "sweep"));
    std::map<int, std::vector<Track>> training;
    for (const auto& lt : scene.ground_tracks) training[lt.cls.index()].push_back(resample_uniform(lt.track, 0.2));
    const double best = kde::optimize_bandwidth(training, cands).best;
    inside += best >= 0.5 && best <= 3.0;
    picks << (i ? " " : "") << fmt("%.2f", best);
  }
  return {inside >= 18, fmt("argmax in [0.5, 3.0] m for %d/20 seeds (picks: %s)", inside, picks.str().c_str())};
}

Outcome oracle_equivalence() {
  const double pitch = 3.0, bw = 0.25;
  const auto spec = separated_intersection(pitch);
  const auto train = synth::generate_scene(spec, 240, 71);
  const auto test = synth::generate_scene(spec, 240, 72);
  io::Calibration identity;
  identity.homography = calib::Homography(Mat3::Identity(), 1.0);
  const auto prep = [&](const synth::SyntheticScene& s, std::vector<int>& labels) {
    std::vector<Track> raw;
    for (const auto& lt : s.ground_tracks) {
      raw.push_back(lt.track);
      labels.push_back(lt.cls.index());
    }
    return pipeline::prepare_tracks(raw, classify::Domain::ground, identity, 0.2);
  };
  std::vector<int> train_labels, test_labels;
  const auto tr = prep(train, train_labels);
  const auto te = prep(test, test_labels);
  if (te.size() != test_labels.size()) return {false, "prepared test set lost tracks"};

  pipeline::LearnSettings ls;
  ls.cell = 0.1;
  ls.bandwidth = bw;
  ls.seed = 5;
  const auto models = pipeline::learn_models(tr, spec.roi, ls);
  const classify::Models cm{&spec.roi, &models.prototypes, &models.likelihood};

  std::string detail = fmt("lane pitch %.0f bw,", pitch / bw);
  bool pass = true;
  for (Method m : classify::kAllMethods) {
    int correct = 0;
    for (std::size_t i = 0; i < te.size(); ++i) {
      const auto r = classify::classify(te[i], m, cm);
      correct += r.cls && r.cls->index() == test_labels[i];
    }
    pass = pass && correct == static_cast<int>(te.size());
    detail += fmt(" %s %d/%zu", std::string(classify::to_string(m)).c_str(), correct, te.size());
  }
  int ee_agrees = 0;
  for (const auto& t : te) {
    const auto lab = label_training_track(t, spec.roi);
    const auto ee = classify::classify_ee(t, spec.roi);
    ee_agrees += lab && ee.cls == lab;
  }
  pass = pass && ee_agrees == static_cast<int>(te.size());
  detail += fmt(", ee = training labeler %d/%zu", ee_agrees, te.size());
  return {pass, detail};
}

// Ground-vs-camera and method ordering are evaluated on the same scenes.
struct DomainRuns {
  std::vector<std::array<double, 4>> camera, ground;  // mae per method in kAllMethods order
  bool done = false;
};

DomainRuns& domain_runs() {
  static DomainRuns runs;
  if (runs.done) return runs;
  Scenario s;
  synth::FourLegOptions fo;
  fo.sigma = 1.0;
  s.spec = synth::four_leg_intersection(fo);
  const double d = 30.0 / std::sqrt(2.0);
  auto cam = pipeline::pole_camera("cam1", Vec2(-d, d), 5.0, {0, 0});
  cam.camera.detection_noise_px = 1.0;
  cam.camera.truncation_probability = 0.2;
  cam.keypoint_noise_px = 0.5;
  s.cameras.push_back(cam);
  const std::vector<Method> methods(classify::kAllMethods.begin(), classify::kAllMethods.end());
  for (int i = 0; i < kStatSeeds; ++i) {
    const std::uint64_t seed = 1000 + static_cast<std::uint64_t>(i);
    const auto scenes = make_scenes(s, seed);
    const auto gt = scenes.validation.ground_truth();
    for (Domain dom : {Domain::camera, Domain::ground}) {
      const double bw = dom == Domain::camera ? kCameraBandwidthPx : kGroundBandwidthM;
      const auto run = run_camera(s, scenes, cam, seed, dom, bw, methods);
      std::array<double, 4> mae{};
      for (std::size_t m = 0; m < 4; ++m) mae[m] = fusion::mae_and_bias(run.validation_counts.at(methods[m]), gt).mae;
      (dom == Domain::camera ? runs.camera : runs.ground).push_back(mae);
    }
  }
  runs.done = true;
  return runs;
}

std::size_t method_slot(Method m) {
  return static_cast<std::size_t>(std::find(classify::kAllMethods.begin(), classify::kAllMethods.end(), m) -
                                  classify::kAllMethods.begin());
}

Outcome ground_vs_camera() {
  const auto& r = domain_runs();
  const std::size_t ml = method_slot(Method::ml);
  int wins = 0;
  double cam_mean = 0, ground_mean = 0;
  for (int i = 0; i < kStatSeeds; ++i) {
    wins += r.ground[i][ml] <= r.camera[i][ml];
    cam_mean += r.camera[i][ml] / kStatSeeds;
    ground_mean += r.ground[i][ml] / kStatSeeds;
  }
  return {wins * 5 >= kStatSeeds * 4, fmt("ground ML MAE <= camera ML MAE in %d/%d seeds (mean %.1f%% vs %.1f%%)", wins,
                                          kStatSeeds, 100 * ground_mean, 100 * cam_mean)};
}

Outcome method_ordering() {
  const auto& r = domain_runs();
  const std::size_t ml = method_slot(Method::ml), dir = method_slot(Method::dir), vote = method_slot(Method::vote);
  bool pass = true;
  std::string detail;
  for (const auto* runs : {&r.camera, &r.ground}) {
    int ml_dir = 0, dir_vote = 0;
    std::array<double, 4> mean{};
    for (const auto& m : *runs) {
      ml_dir += m[ml] <= m[dir];
      dir_vote += m[dir] <= m[vote];
      for (std::size_t k = 0; k < 4; ++k) mean[k] += m[k] / kStatSeeds;
    }
    pass = pass && ml_dir * 10 >= kStatSeeds * 7 && dir_vote * 10 >= kStatSeeds * 7;
    detail += fmt("%s: ML<=DIR %d/%d, DIR<=VOTE %d/%d (mean ee %.1f%% dir %.1f%% vote %.1f%% ml %.1f%%)",
                  runs == &r.camera ? "camera" : "; ground", ml_dir, kStatSeeds, dir_vote, kStatSeeds,
                  100 * mean[method_slot(Method::ee)], 100 * mean[dir], 100 * mean[vote], 100 * mean[ml]);
  }
  return {pass, detail + ", scenes shared with ground vs camera"};
}

Outcome fusion_suite() {
  const auto a = fusion::assign_classes(four_camera_errors());
  const auto want = four_camera_assignment();
  int matched = 0;
  for (int c = 1; c <= kNumClasses; ++c) matched += a.at(c) == want.at(c);

  Scenario s;
  s.spec = synth::four_leg_intersection({});
  const double deg = std::numbers::pi / 180.0;
  for (int k = 0; k < 4; ++k) {
    const double phi = (45.0 + 90.0 * k) * deg;
    const Vec2 pos = 28.0 * Vec2(std::cos(phi), std::sin(phi));
    auto cam = pipeline::pole_camera("cam" + std::to_string(k + 1), pos, 6.0, {0, 0});
    cam.camera.detection_noise_px = 1.0;
    cam.camera.truncation_probability = 0.2;
    cam.keypoint_noise_px = 0.5;
    // A 1.5 m blocker on the line of sight, 6 m from the centre.
    const Vec2 d = 6.0 * Vec2(std::cos(phi), std::sin(phi)) - pos;
    synth::OcclusionSector occ;
    occ.center = pos;
    const double a0 = std::atan2(d.y(), d.x()), half = std::atan(1.5 / d.norm());
    occ.angle_from = a0 - half;
    occ.angle_to = a0 + half;
    occ.r_min = d.norm() - 1.5;
    occ.r_max = d.norm() + 1.5;
    cam.camera.occlusions.push_back(occ);
    s.cameras.push_back(cam);
  }
  int wins = 0, train_ok = 0;
  double single_mean = 0, fused_mean = 0;
  for (int i = 0; i < kStatSeeds; ++i) {
    const std::uint64_t seed = 2000 + static_cast<std::uint64_t>(i);
    const auto scenes = make_scenes(s, seed);
    std::map<std::string, classify::CountReport> tr, va;
    for (const auto& cam : s.cameras) {
      const auto run = run_camera(s, scenes, cam, seed, Domain::ground, kGroundBandwidthM, {Method::ml});
      tr[cam.camera.camera_id] = run.train_counts.at(Method::ml);
      va[cam.camera.camera_id] = run.validation_counts.at(Method::ml);
    }
    const auto f = pipeline::fuse(tr, scenes.train.ground_truth(), va, scenes.validation.ground_truth());
    double best_val = 1e300;
    bool below_all = true;
    for (const auto& [c, m] : f.single_validation) {
      best_val = std::min(best_val, m.mae);
      below_all = below_all && f.multi_train.mae <= f.single_train.at(c).mae;
    }
    wins += f.multi_validation.mae < best_val;
    train_ok += below_all;
    single_mean += best_val / kStatSeeds;
    fused_mean += f.multi_validation.mae / kStatSeeds;
  }
  return {matched == 12 && wins * 5 >= kStatSeeds * 4 && train_ok == kStatSeeds,
          fmt("fixture %d/12 classes; fused validation < best single in %d/%d seeds (mean %.1f%% vs %.1f%%); "
              "fused train <= every single in %d/%d",
              matched, wins, kStatSeeds, 100 * fused_mean, 100 * single_mean, train_ok, kStatSeeds)};
}

Outcome metric_arithmetic() {
  fusion::GroundTruthCounts gt;
  gt.counts[0] = 1;
  std::array<int, kNumClasses> pred{};
  pred[0] = 5;
  const double e = *fusion::per_class_error(pred, gt)[0];
  Rng rng(99);
  std::uniform_int_distribution<int> u(0, 40);
  int ok = 0, n = 0;
  while (n < 1000) {
    std::array<int, kNumClasses> p{};
    fusion::GroundTruthCounts g;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      p[c] = u(rng);
      g.counts[c] = u(rng);
    }
    try {
      const auto mb = fusion::mae_and_bias(p, g);
      ok += std::abs(mb.bias) <= mb.mae;
      ++n;
    } catch (const Error&) {
    }
  }
  return {std::abs(e - 4.0) < 1e-15 && ok == 1000, fmt("(gt 1, pred 5) -> %.0f%%; |bias| <= mae on %d/1000", 100 * e, ok)};
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = io::read_text(e.path());
  return out;
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / ("tmc_accept_" + std::to_string(std::random_device{}()));
  pipeline::SiteConfig gen;
  gen.output_dir = root / "site";
  gen.seed = 17;
  gen.simulate = {{"n_train", 150},
                  {"n_validation", 150},
                  {"cameras", {{{"camera_id", "cam1"}, {"position", {-21.0, 21.0}}, {"height", 6.0}, {"noise_px", 1.0},
                                {"truncation", 0.2}}}}};
  pipeline::cmd_simulate(gen);
  bool same = true;
  std::size_t files = 0;
  for (Domain d : {Domain::ground, Domain::camera}) {
    std::map<std::string, std::string> first;
    for (int rep = 0; rep < 2; ++rep) {
      auto cfg = pipeline::load_site_config(root / "site" / "site.json");
      cfg.domain = d;
      cfg.kde.bandwidth_ground_m.reset();
      cfg.kde.bandwidth_camera_px = kCameraBandwidthPx;
      cfg.output_dir = root / ("run" + std::to_string(rep));
      pipeline::cmd_learn(cfg);
      pipeline::cmd_count(cfg);
      auto snap = snapshot(cfg.output_dir);
      if (rep == 0) first = std::move(snap);
      else same = same && snap == first;
    }
    files += first.size();
  }
  fs::remove_all(root);
  return {same, fmt("learn + count artifacts %s across reruns (%zu files, both domains)", same ? "byte-identical" : "DIFFER",
                    files)};
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::err);
  const std::vector<Criterion> criteria{
      {"homography suite", 5, homography_suite},
      {"kde suite", 30, kde_suite},
      {"bandwidth sweep", 120, bandwidth_sweep},
      {"classifier oracle equivalence", 60, oracle_equivalence},
      {"ground vs camera", 300, ground_vs_camera},
      {"method ordering", 300, method_ordering},
      {"fusion fixture and property", 300, fusion_suite},
      {"metric arithmetic", 5, metric_arithmetic},
      {"determinism", 300, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.time_limit_s;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("%s  %s: %s [%.1f s, limit %.0f s%s]\n", pass ? "PASS" : "FAIL", c.name.c_str(), o.detail.c_str(), secs,
                c.time_limit_s, in_time ? "" : ", too slow");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed ? 1 : 0;
}
