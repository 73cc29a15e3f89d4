#pragma once

#include "tmc/classify.hpp"
#include "tmc/roi.hpp"

#include <array>
#include <map>
#include <optional>
#include <string>

namespace tmc::fusion {

struct GroundTruthCounts {
  std::array<int, kNumClasses> counts{};
  int count(int class_index) const { return counts[static_cast<std::size_t>(class_index - 1)]; }
};

/// Relative count error per class; nullopt where ground truth is zero but
/// the prediction is not (undefined, excluded from means).
using ClassErrors = std::array<std::optional<double>, kNumClasses>;

ClassErrors per_class_error(const std::array<int, kNumClasses>& pred, const GroundTruthCounts& gt);
inline ClassErrors per_class_error(const classify::CountReport& pred, const GroundTruthCounts& gt) {
  return per_class_error(pred.counts, gt);
}

struct MaeBias {
  double mae = 0.0;
  double bias = 0.0;
  int defined_classes = 0;
};

/// Mean of |pred - gt| / gt and of (pred - gt) / gt over defined classes.
MaeBias mae_and_bias(const std::array<int, kNumClasses>& pred, const GroundTruthCounts& gt);
inline MaeBias mae_and_bias(const classify::CountReport& pred, const GroundTruthCounts& gt) {
  return mae_and_bias(pred.counts, gt);
}

using ErrorMatrix = std::map<std::string, ClassErrors>;  // camera id -> per-class errors

using CameraAssignment = std::map<int, std::string>;  // class index -> camera id

/// Assigns every class to the camera with the lowest error. Classes with a
/// unique minimum are fixed first; tied classes are then resolved in index
/// order towards the tied camera holding the fewest classes, then the lowest
/// camera id.
CameraAssignment assign_classes(const ErrorMatrix& errors);

/// Takes each class's count from the camera it is assigned to.
classify::CountReport fused_counts(const std::map<std::string, classify::CountReport>& per_camera,
                                   const CameraAssignment& assignment);

}  // namespace tmc::fusion
