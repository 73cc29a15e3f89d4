#include "tmc/kde.hpp"

#include "tmc/error.hpp"

#include <Eigen/Dense>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdint>
#include <cmath>
#include <numbers>

namespace tmc::kde {

void GridSpec::validate() const {
  if (!(cell > 0.0) || !std::isfinite(cell)) throw Error(Errc::invalid_argument, "grid cell must be positive");
  if (width < 1 || height < 1) throw Error(Errc::invalid_argument, "grid must have at least one cell");
  if (!is_finite(origin)) throw Error(Errc::invalid_argument, "grid origin must be finite");
}

Box2 GridSpec::extent() const {
  Box2 b;
  b.min = origin;
  b.max = origin + Vec2(width * cell, height * cell);
  return b;
}

GridSpec GridSpec::covering(const Box2& box, double margin, double cell) {
  if (box.empty()) throw Error(Errc::invalid_argument, "cannot build a grid around an empty box");
  GridSpec g;
  g.cell = cell;
  g.origin = box.min - Vec2::Constant(margin);
  const Vec2 size = box.max - box.min + Vec2::Constant(2.0 * margin);
  g.width = std::max(1, static_cast<int>(std::ceil(size.x() / cell)));
  g.height = std::max(1, static_cast<int>(std::ceil(size.y() / cell)));
  g.validate();
  return g;
}

std::optional<double> LikelihoodMap::lookup(const Vec2& p) const {
  const double fx = (p.x() - grid.origin.x()) / grid.cell;
  const double fy = (p.y() - grid.origin.y()) / grid.cell;
  if (!(fx >= 0.0 && fx <= grid.width && fy >= 0.0 && fy <= grid.height)) return std::nullopt;
  // Continuous index of cell centres, clamped at the border half-cells.
  const double u = std::clamp(fx - 0.5, 0.0, static_cast<double>(grid.width - 1));
  const double v = std::clamp(fy - 0.5, 0.0, static_cast<double>(grid.height - 1));
  const int c0 = std::min(static_cast<int>(u), std::max(grid.width - 2, 0));
  const int r0 = std::min(static_cast<int>(v), std::max(grid.height - 2, 0));
  const int c1 = std::min(c0 + 1, grid.width - 1);
  const int r1 = std::min(r0 + 1, grid.height - 1);
  const double a = u - c0;
  const double b = v - r0;
  return (1 - a) * (1 - b) * at(c0, r0) + a * (1 - b) * at(c1, r0) + (1 - a) * b * at(c0, r1) +
         a * b * at(c1, r1);
}

double LikelihoodMap::mass() const {
  double s = 0.0;
  for (double d : density) s += d;
  return s * grid.cell * grid.cell;
}

LikelihoodMap build_kde_map(std::span<const Vec2> points, double bandwidth, const GridSpec& grid,
                            const KdeOptions& opts) {
  if (points.empty()) throw Error(Errc::invalid_argument, "build_kde_map needs at least one point");
  if (!(bandwidth > 0.0)) throw Error(Errc::invalid_argument, "bandwidth must be positive");
  grid.validate();

  LikelihoodMap map;
  map.grid = grid;
  map.bandwidth = bandwidth;
  map.n_points = points.size();
  map.density.assign(grid.size(), 0.0);

  const double radius = opts.truncation_bw * bandwidth;
  const double inv2h2 = 1.0 / (2.0 * bandwidth * bandwidth);
  const double cell = grid.cell;

  // Kernels are separable: each point contributes an outer product of a row
  // weight vector and a column weight vector. Points are bucketed into tiles
  // about one truncation radius wide and each chunk of a tile is accumulated
  // with a single dense product over the tile's window.
  const double tile = std::max(radius, 8.0 * cell);
  std::vector<std::pair<std::int64_t, std::size_t>> order;
  order.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto tx = static_cast<std::int64_t>(std::floor((points[i].x() - grid.origin.x()) / tile));
    const auto ty = static_cast<std::int64_t>(std::floor((points[i].y() - grid.origin.y()) / tile));
    order.emplace_back(ty * 1000003 + tx, i);
  }
  std::sort(order.begin(), order.end());

  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<RowMat> dens(map.density.data(), grid.height, grid.width);
  constexpr std::size_t kChunk = 256;
  Eigen::MatrixXd wy, wx;

  std::size_t begin = 0;
  while (begin < order.size()) {
    std::size_t end = begin;
    while (end < order.size() && order[end].first == order[begin].first && end - begin < kChunk) ++end;
    Box2 box;
    for (std::size_t k = begin; k < end; ++k) box.extend(points[order[k].second]);
    const int c0 = std::max(0, static_cast<int>(std::floor((box.min.x() - radius - grid.origin.x()) / cell)));
    const int c1 = std::min(grid.width - 1, static_cast<int>(std::ceil((box.max.x() + radius - grid.origin.x()) / cell)));
    const int r0 = std::max(0, static_cast<int>(std::floor((box.min.y() - radius - grid.origin.y()) / cell)));
    const int r1 = std::min(grid.height - 1, static_cast<int>(std::ceil((box.max.y() + radius - grid.origin.y()) / cell)));
    if (c0 <= c1 && r0 <= r1) {
      const int nc = c1 - c0 + 1;
      const int nr = r1 - r0 + 1;
      const auto m = static_cast<Eigen::Index>(end - begin);
      wy.setZero(nr, m);
      wx.setZero(m, nc);
      for (Eigen::Index k = 0; k < m; ++k) {
        const Vec2& p = points[order[begin + static_cast<std::size_t>(k)].second];
        for (int r = 0; r < nr; ++r) {
          const double dy = grid.origin.y() + (r0 + r + 0.5) * cell - p.y();
          if (std::abs(dy) <= radius) wy(r, k) = std::exp(-dy * dy * inv2h2);
        }
        for (int c = 0; c < nc; ++c) {
          const double dx = grid.origin.x() + (c0 + c + 0.5) * cell - p.x();
          if (std::abs(dx) <= radius) wx(k, c) = std::exp(-dx * dx * inv2h2);
        }
      }
      dens.block(r0, c0, nr, nc).noalias() += wy * wx;
    }
    begin = end;
  }

  const double norm =
      1.0 / (static_cast<double>(points.size()) * 2.0 * std::numbers::pi * bandwidth * bandwidth);
  for (double& d : map.density) d *= norm;
  return map;
}

LikelihoodMap build_kde_map(std::span<const Track> tracks, double bandwidth, const GridSpec& grid,
                            const KdeOptions& opts) {
  if (tracks.empty()) throw Error(Errc::invalid_argument, "build_kde_map needs at least one track");
  std::vector<Vec2> pts;
  for (const auto& t : tracks) pts.insert(pts.end(), t.points.begin(), t.points.end());
  return build_kde_map(std::span<const Vec2>(pts), bandwidth, grid, opts);
}

double track_log_likelihood(const Track& t, const LikelihoodMap& map, double floor) {
  const double log_floor = std::log(floor);
  double ll = 0.0;
  for (const auto& p : t.points) {
    const auto d = map.lookup(p);
    ll += (d && *d > floor) ? std::log(*d) : log_floor;
  }
  return ll;
}

MovementLikelihoodModel build_model(const std::map<int, std::vector<Track>>& training, Frame frame,
                                    double bandwidth, const GridSpec& grid, double floor_density,
                                    const KdeOptions& opts) {
  if (!(floor_density > 0.0)) throw Error(Errc::invalid_argument, "floor density must be positive");
  MovementLikelihoodModel model;
  model.frame = frame;
  model.grid = grid;
  model.bandwidth = bandwidth;
  model.floor_density = floor_density;
  for (const auto& [cls, tracks] : training) {
    if (tracks.empty()) continue;
    model.classes.emplace(cls, build_kde_map(std::span<const Track>(tracks), bandwidth, grid, opts));
  }
  return model;
}

std::vector<double> geometric_candidates(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi >= lo) || count < 1) throw Error(Errc::invalid_argument, "bad bandwidth candidate range");
  std::vector<double> out;
  if (count == 1) return {lo};
  const double ratio = std::pow(hi / lo, 1.0 / (count - 1));
  for (int i = 0; i < count; ++i) out.push_back(i == count - 1 ? hi : lo * std::pow(ratio, i));
  return out;
}

BandwidthSweep optimize_bandwidth(const std::map<int, std::vector<Track>>& training,
                                  std::span<const double> candidates, const SweepOptions& opts) {
  if (candidates.empty()) throw Error(Errc::invalid_argument, "no bandwidth candidates");
  for (double c : candidates)
    if (!(c > 0.0)) throw Error(Errc::invalid_argument, "bandwidth candidates must be positive");

  struct Split {
    std::vector<Track> build, eval;
  };
  std::map<int, Split> splits;
  Box2 box;
  for (const auto& [cls, tracks] : training) {
    if (tracks.size() < 2) continue;
    std::vector<std::size_t> idx(tracks.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      const auto ta = tracks[a].start_time();
      const auto tb = tracks[b].start_time();
      if (ta && tb) return *ta < *tb;
      return false;
    });
    Split s;
    const std::size_t half = tracks.size() / 2;
    for (std::size_t i = 0; i < idx.size(); ++i) (i < half ? s.build : s.eval).push_back(tracks[idx[i]]);
    for (const auto& t : tracks) box.extend(bounding_box(t.points));
    splits.emplace(cls, std::move(s));
  }
  if (splits.empty()) throw Error(Errc::no_training_data, "bandwidth sweep: no class has two or more tracks");

  BandwidthSweep sweep;
  sweep.candidates.assign(candidates.begin(), candidates.end());
  double best_obj = -std::numeric_limits<double>::infinity();
  for (double bw : candidates) {
    const GridSpec grid = GridSpec::covering(box, opts.margin_bw * bw, opts.cell);
    double total = 0.0;
    std::size_t n_pts = 0;
    for (const auto& [cls, s] : splits) {
      const auto map = build_kde_map(std::span<const Track>(s.build), bw, grid, opts.kde);
      for (const auto& t : s.eval) {
        total += track_log_likelihood(t, map, opts.floor_density);
        n_pts += t.points.size();
      }
    }
    const double obj = total / static_cast<double>(n_pts);
    sweep.objective.push_back(obj);
    spdlog::debug("bandwidth {:.4g}: mean held-out log-likelihood {:.6g}", bw, obj);
    if (obj > best_obj) {
      best_obj = obj;
      sweep.best = bw;
    }
  }
  return sweep;
}

}  // namespace tmc::kde
