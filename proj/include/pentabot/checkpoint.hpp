#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pentabot/mlp.hpp"
#include "pentabot/policy.hpp"

namespace pentabot::agents {

class PpoAgent;
class SacAgent;

inline constexpr int kCheckpointFormatVersion = 1;

struct NetworkRecord {
  std::string name;
  MlpSpec spec;
  Eigen::VectorXd params;
};

/// Self-describing policy snapshot. Serialization is byte-stable: the same
/// parameters always produce the same text.
struct PolicyCheckpoint {
  int format_version = kCheckpointFormatVersion;
  std::string algorithm;  // "ppo" | "sac"
  std::string scenario;
  int obs_dim = 0;
  int act_dim = 0;
  long long global_step = 0;
  std::uint64_t seed = 0;
  std::vector<NetworkRecord> networks;  // "actor" first
  Eigen::VectorXd raw_log_std;          // ppo only

  const NetworkRecord& network(const std::string& name) const;
  /// Rebuilds the actor for inference.
  GaussianActor actor() const;
};

PolicyCheckpoint make_checkpoint(const PpoAgent& agent, const std::string& scenario, long long global_step,
                                 std::uint64_t seed);
PolicyCheckpoint make_checkpoint(const SacAgent& agent, const std::string& scenario, long long global_step,
                                 std::uint64_t seed);

std::string checkpoint_to_text(const PolicyCheckpoint& ckpt);
PolicyCheckpoint checkpoint_from_text(const std::string& text);

void save_checkpoint(const std::filesystem::path& path, const PolicyCheckpoint& ckpt);
PolicyCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace pentabot::agents
