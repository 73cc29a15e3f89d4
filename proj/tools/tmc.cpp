#include "tmc/error.hpp"
#include "tmc/pipeline.hpp"
#include "tmc/ui_service.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>

namespace {

void configure_logging() {
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::info);
  if (const char* lvl = std::getenv("TMC_LOG")) spdlog::set_level(spdlog::level::from_str(lvl));
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();

  CLI::App app{"Turning movement counts from vehicle tracks"};
  app.require_subcommand(1);
  std::string config_path;
  std::string domain;
  std::string methods;
  std::optional<std::uint64_t> seed;

  const char* names[] = {"calibrate", "learn", "count", "fuse", "simulate", "serve-ui"};
  const char* help[] = {"estimate homographies from keypoint files",
                        "learn prototypes and likelihood maps (never reads ground truth)",
                        "classify and count tracks, with metrics when ground truth is given",
                        "assign classes to cameras on training data and fuse validation counts",
                        "write a synthetic site with calibrations, tracks and ground truth",
                        "serve the calibration endpoints"};
  std::vector<CLI::App*> subs;
  for (int i = 0; i < 6; ++i) {
    auto* sub = app.add_subcommand(names[i], help[i]);
    sub->add_option("--config", config_path, "site config JSON")->required();
    sub->add_option("--domain", domain, "camera or ground")->check(CLI::IsMember({"camera", "ground"}));
    sub->add_option("--methods", methods, "comma-separated subset of ee,dir,vote,ml");
    sub->add_option("--seed", seed, "root seed");
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    auto cfg = tmc::pipeline::load_site_config(config_path);
    if (!domain.empty()) cfg.domain = tmc::classify::domain_from_string(domain);
    if (!methods.empty()) cfg.methods = tmc::classify::parse_methods(methods);
    if (seed) cfg.seed = *seed;

    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "calibrate") return tmc::pipeline::cmd_calibrate(cfg);
    if (cmd == "learn") return tmc::pipeline::cmd_learn(cfg);
    if (cmd == "count") return tmc::pipeline::cmd_count(cfg);
    if (cmd == "fuse") return tmc::pipeline::cmd_fuse(cfg);
    if (cmd == "simulate") return tmc::pipeline::cmd_simulate(cfg);
    return tmc::ui::cmd_serve_ui(cfg);
  } catch (const tmc::Error& e) {
    spdlog::error("{}: {}", tmc::to_string(e.code()), e.what());
    return tmc::exit_code_for(e.code());
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 3;
  }
}
