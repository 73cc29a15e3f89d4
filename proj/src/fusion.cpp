#include "tmc/fusion.hpp"

#include "tmc/error.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>

namespace tmc::fusion {

ClassErrors per_class_error(const std::array<int, kNumClasses>& pred, const GroundTruthCounts& gt) {
  ClassErrors e;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (gt.counts[c] > 0)
      e[c] = std::abs(pred[c] - gt.counts[c]) / static_cast<double>(gt.counts[c]);
    else if (pred[c] == 0)
      e[c] = 0.0;
  }
  return e;
}

MaeBias mae_and_bias(const std::array<int, kNumClasses>& pred, const GroundTruthCounts& gt) {
  MaeBias r;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (gt.counts[c] > 0) {
      const double d = (pred[c] - gt.counts[c]) / static_cast<double>(gt.counts[c]);
      r.mae += std::abs(d);
      r.bias += d;
      ++r.defined_classes;
    } else if (pred[c] == 0) {
      ++r.defined_classes;
    }
  }
  if (r.defined_classes == 0) throw Error(Errc::invalid_argument, "no class has a defined count error");
  r.mae /= r.defined_classes;
  r.bias /= r.defined_classes;
  return r;
}

CameraAssignment assign_classes(const ErrorMatrix& errors) {
  if (errors.empty()) throw Error(Errc::missing_camera, "assign_classes needs at least one camera");
  CameraAssignment out;
  std::map<std::string, int> load;
  for (const auto& [cam, _] : errors) load[cam] = 0;

  std::map<int, std::vector<std::string>> tied;
  for (int c = 1; c <= kNumClasses; ++c) {
    double best = std::numeric_limits<double>::infinity();
    std::vector<std::string> arg;
    for (const auto& [cam, errs] : errors) {
      const auto& e = errs[static_cast<std::size_t>(c - 1)];
      if (!e) continue;
      if (*e < best) {
        best = *e;
        arg = {cam};
      } else if (*e == best) {
        arg.push_back(cam);
      }
    }
    if (arg.empty())
      throw Error(Errc::invalid_argument, "class " + std::to_string(c) + " has no defined error on any camera");
    if (arg.size() == 1) {
      out[c] = arg.front();
      ++load[arg.front()];
    } else {
      tied[c] = std::move(arg);
    }
  }
  // Cameras in each tie list are in id order, so the first minimum is the lowest id.
  for (const auto& [c, cams] : tied) {
    const std::string* pick = &cams.front();
    for (const auto& cam : cams)
      if (load[cam] < load[*pick]) pick = &cam;
    out[c] = *pick;
    ++load[*pick];
  }
  return out;
}

classify::CountReport fused_counts(const std::map<std::string, classify::CountReport>& per_camera,
                                   const CameraAssignment& assignment) {
  classify::CountReport fused;
  fused.camera_id = "fused";
  bool first = true;
  for (const auto& [c, cam] : assignment) {
    const auto it = per_camera.find(cam);
    if (it == per_camera.end()) throw Error(Errc::missing_camera, "no count report for camera '" + cam + "'");
    if (first) {
      fused.domain = it->second.domain;
      fused.method = it->second.method;
      first = false;
    }
    fused.counts[static_cast<std::size_t>(c - 1)] = it->second.counts[static_cast<std::size_t>(c - 1)];
  }
  return fused;
}

}  // namespace tmc::fusion
