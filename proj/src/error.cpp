#include "tmc/error.hpp"

namespace tmc {

const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "invalid argument";
    case Errc::insufficient_points: return "insufficient correspondences";
    case Errc::degenerate_configuration: return "degenerate configuration";
    case Errc::horizon: return "point maps beyond the horizon";
    case Errc::non_convergence: return "iteration did not converge";
    case Errc::degenerate_track: return "degenerate track";
    case Errc::frame_mismatch: return "coordinate frame mismatch";
    case Errc::unclassifiable: return "unclassifiable track";
    case Errc::no_training_data: return "no training data";
    case Errc::missing_camera: return "missing camera";
    case Errc::io: return "i/o error";
    case Errc::parse: return "parse error";
    case Errc::config: return "configuration error";
  }
  return "unknown error";
}

int exit_code_for(Errc code) noexcept {
  switch (code) {
    case Errc::io:
    case Errc::parse:
    case Errc::config:
    case Errc::invalid_argument:
      return 2;
    case Errc::degenerate_configuration:
    case Errc::horizon:
    case Errc::non_convergence:
      return 4;
    default:
      return 3;
  }
}

}  // namespace tmc
