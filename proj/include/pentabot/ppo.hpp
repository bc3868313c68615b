#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "pentabot/mlp.hpp"
#include "pentabot/policy.hpp"

namespace pentabot::agents {

struct PpoConfig {
  double clip = 0.2;
  double gamma = 0.99;
  double lambda = 0.95;
  int epochs = 10;
  int minibatch = 256;
  int rollout = 2048;
  double actor_lr = 3e-4;
  double critic_lr = 1e-3;
  double entropy_coef = 0.0;
  double max_grad_norm = 0.5;
  double target_kl = 0.0;  // 0 disables early stopping
  double init_log_std = -0.5;
  bool anneal_lr = false;  // linear decay of both learning rates to 0
  std::vector<int> hidden{128, 128};

  void validate() const;
};

/// Minibatch for the PPO losses; samples are columns.
struct PpoBatch {
  Eigen::MatrixXd obs;             // obs_dim x B
  Eigen::MatrixXd u;               // act_dim x B, pre-squash actions taken
  Eigen::VectorXd old_log_prob;    // Gaussian log-prob of u under the old policy
  Eigen::VectorXd advantages;      // normalized
  Eigen::VectorXd returns;
};

struct PolicyLossResult {
  double loss = 0.0;        // -surrogate - entropy_coef * entropy
  double surrogate = 0.0;   // mean clipped objective
  double entropy = 0.0;     // mean Gaussian entropy (pre-squash)
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  Eigen::VectorXd grad_net;
  Eigen::VectorXd grad_log_std;  // state-independent actors only
};

/// Clipped surrogate in minimization form, with gradients.
PolicyLossResult ppo_policy_loss(const GaussianActor& actor, const PpoBatch& batch, double clip,
                                 double entropy_coef);

struct ValueLossResult {
  double loss = 0.0;  // 0.5 * mean (V - R)^2
  Eigen::VectorXd grad;
};

ValueLossResult value_loss(const Mlp& critic, const Eigen::MatrixXd& obs, const Eigen::VectorXd& returns);

/// In-place zero-mean, unit-variance normalization (no-op scaling for B < 2).
void normalize_advantages(Eigen::VectorXd& adv);

/// One rollout of `T` steps. values has T + 1 entries. A truncated step is
/// stored as terminal with gamma * V(next) already folded into its reward.
struct PpoRollout {
  Eigen::MatrixXd obs;
  Eigen::MatrixXd u;
  Eigen::VectorXd log_prob;
  std::vector<double> rewards;
  std::vector<double> values;
  std::vector<bool> terminals;
};

struct PpoStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  int minibatches = 0;
};

class PpoAgent {
 public:
  PpoAgent(int obs_dim, int act_dim, PpoConfig config, std::uint64_t seed);

  const PpoConfig& config() const { return config_; }
  double value(const Eigen::VectorXd& obs) const;
  PpoStats update(const PpoRollout& rollout, std::mt19937_64& rng);

  GaussianActor actor;
  Mlp critic;
  Adam actor_opt;
  Adam log_std_opt;
  Adam critic_opt;

 private:
  PpoConfig config_;
};

}  // namespace pentabot::agents
