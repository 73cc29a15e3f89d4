#pragma once

#include "tmc/geometry.hpp"
#include "tmc/track.hpp"

#include <map>
#include <span>
#include <vector>

namespace tmc::kde {

/// Regular grid; cell (col, row) covers [origin + (col, row) * cell, +cell)
/// and is evaluated at its centre.
struct GridSpec {
  Vec2 origin = Vec2::Zero();
  double cell = 1.0;
  int width = 1;
  int height = 1;

  void validate() const;
  Vec2 cell_center(int col, int row) const {
    return origin + Vec2((col + 0.5) * cell, (row + 0.5) * cell);
  }
  Box2 extent() const;
  std::size_t size() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }

  /// Smallest grid with the given cell covering box grown by margin on each side.
  static GridSpec covering(const Box2& box, double margin, double cell);
  bool operator==(const GridSpec&) const = default;
};

struct LikelihoodMap {
  GridSpec grid;
  std::vector<double> density;  // row-major, height x width, per unit area
  double bandwidth = 0.0;
  std::size_t n_points = 0;

  double at(int col, int row) const {
    return density[static_cast<std::size_t>(row) * static_cast<std::size_t>(grid.width) +
                   static_cast<std::size_t>(col)];
  }
  /// Bilinear interpolation between cell centres; nullopt outside the grid.
  std::optional<double> lookup(const Vec2& p) const;
  /// Riemann sum of the density over the grid.
  double mass() const;
};

struct KdeOptions {
  double truncation_bw = 5.0;  // kernels are cut off at this many bandwidths per axis
};

/// Gaussian KDE over every point of every track, evaluated at cell centres.
LikelihoodMap build_kde_map(std::span<const Track> tracks, double bandwidth, const GridSpec& grid,
                            const KdeOptions& opts = {});
LikelihoodMap build_kde_map(std::span<const Vec2> points, double bandwidth, const GridSpec& grid,
                            const KdeOptions& opts = {});

/// Sum over points of log(max(density, floor)); off-grid points take log(floor).
double track_log_likelihood(const Track& t, const LikelihoodMap& map, double floor);

struct MovementLikelihoodModel {
  Frame frame = Frame::ground_m;
  GridSpec grid;
  double bandwidth = 0.0;
  double floor_density = 1e-12;
  std::map<int, LikelihoodMap> classes;  // only classes with training data
};

/// One map per non-empty class on a shared grid.
MovementLikelihoodModel build_model(const std::map<int, std::vector<Track>>& training, Frame frame,
                                    double bandwidth, const GridSpec& grid, double floor_density,
                                    const KdeOptions& opts = {});

/// Geometric candidates spanning [lo, hi].
std::vector<double> geometric_candidates(double lo, double hi, int count);

struct SweepOptions {
  double cell = 0.22;
  double floor_density = 1e-12;
  double margin_bw = 0.0;  // held-out points all lie inside the box, so none is needed
  KdeOptions kde;
};

struct BandwidthSweep {
  double best = 0.0;
  std::vector<double> candidates;
  std::vector<double> objective;  // mean per-point held-out log-likelihood
};

/// Splits each class's tracks in half by start time (input order when there
/// are no timestamps), builds maps from the first half and scores the second
/// half under its own class map. Classes with fewer than two tracks are
/// skipped.
BandwidthSweep optimize_bandwidth(const std::map<int, std::vector<Track>>& training,
                                  std::span<const double> candidates, const SweepOptions& opts = {});

}  // namespace tmc::kde
