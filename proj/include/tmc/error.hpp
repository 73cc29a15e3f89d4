#pragma once

#include <stdexcept>
#include <string>

namespace tmc {

enum class Errc {
  invalid_argument,
  insufficient_points,
  degenerate_configuration,
  horizon,
  non_convergence,
  degenerate_track,
  frame_mismatch,
  unclassifiable,
  no_training_data,
  missing_camera,
  io,
  parse,
  config,
};

/// Every failure raised by the library carries one of the codes above so the
/// CLI can map it onto an exit status.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

const char* to_string(Errc code) noexcept;

// 2 usage/config, 3 data, 4 numerical degeneracy.
int exit_code_for(Errc code) noexcept;

}  // namespace tmc
