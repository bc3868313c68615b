#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "pentabot/training.hpp"

namespace pentabot::config {

struct ServerSettings {
  std::string address = "127.0.0.1";
  int port = 8765;  // 0 picks a free port
  double speed = 1.0;
  std::uint64_t seed = 1;
};

struct RegionSettings {
  double resolution = 0.005;  // m
  int current_steps = 21;
  double tolerance_fraction = 0.05;
};

/// Everything a config file can set. Flags given on the command line are
/// applied on top of this.
struct AppConfig {
  training::RunConfig run;
  RegionSettings region;
  ServerSettings server;
  bool curriculum_explicit = false;  // curriculum given in the file
  bool region_steps_explicit = false;
};

/// Parses a JSON document. Unknown keys anywhere in the tree are rejected
/// with ConfigError naming the key path; values are validated on load.
AppConfig parse_config(const std::string& text);
AppConfig load_config(const std::filesystem::path& path);

/// Path named by PENTABOT_CONFIG, if set and non-empty.
std::optional<std::filesystem::path> default_config_path();

/// Throws ConfigError on any violated invariant.
void validate(const AppConfig& config);

}  // namespace pentabot::config
