#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "pentabot/mlp.hpp"
#include "pentabot/policy.hpp"

namespace pentabot::agents {

struct SacConfig {
  double alpha = 0.2;
  bool auto_alpha = false;
  double target_entropy = 0.0;  // 0 means -act_dim
  double gamma = 0.99;
  double tau = 0.005;
  std::size_t replay_capacity = 1'000'000;
  int batch = 256;
  double actor_lr = 3e-4;
  double critic_lr = 3e-4;
  double alpha_lr = 3e-4;
  std::vector<int> hidden{128, 128};

  void validate() const;
};

struct Transition {
  Eigen::VectorXd obs;
  Eigen::VectorXd action;  // in [0, 1]
  double reward = 0.0;
  Eigen::VectorXd next_obs;
  bool terminated = false;
};

/// Ring buffer; the oldest transition is overwritten once full.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, int obs_dim, int act_dim);

  void add(const Transition& t);
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  Transition at(std::size_t i) const;  // 0 = oldest

  struct Batch {
    Eigen::MatrixXd obs, action, next_obs;
    Eigen::VectorXd reward, terminated;
  };
  /// Uniform with replacement.
  Batch sample(int n, std::mt19937_64& rng) const;

 private:
  std::size_t capacity_;
  std::size_t size_ = 0;
  std::size_t head_ = 0;
  Eigen::MatrixXd obs_, action_, next_obs_;
  Eigen::VectorXd reward_, terminated_;
};

/// Critic input: observation stacked over the action mapped to [-1, 1].
Eigen::MatrixXd critic_input(const Eigen::MatrixXd& obs, const Eigen::MatrixXd& action01);

struct QLossResult {
  double loss = 0.0;  // 0.5 * mean (Q - y)^2
  Eigen::VectorXd grad;
};

/// Regression of one critic onto fixed targets y.
QLossResult sac_q_loss(const Mlp& q, const Eigen::MatrixXd& obs, const Eigen::MatrixXd& action01,
                       const Eigen::VectorXd& targets);

struct SacPolicyLossResult {
  double loss = 0.0;  // mean(alpha * log pi - min(Q1, Q2))
  double log_prob = 0.0;  // mean
  Eigen::VectorXd grad;
};

/// Reparameterized policy loss with fixed standard-normal noise (act x B).
SacPolicyLossResult sac_policy_loss(const GaussianActor& actor, const Mlp& q1, const Mlp& q2,
                                    const Eigen::MatrixXd& obs, const Eigen::MatrixXd& noise, double alpha);

struct SacStats {
  double q1_loss = 0.0;
  double q2_loss = 0.0;
  double policy_loss = 0.0;
  double entropy = 0.0;  // -mean log pi
  double alpha = 0.0;
};

class SacAgent {
 public:
  SacAgent(int obs_dim, int act_dim, SacConfig config, std::uint64_t seed);

  const SacConfig& config() const { return config_; }
  double alpha() const;
  /// One gradient step on both critics, the actor and (optionally) alpha.
  SacStats update(const ReplayBuffer& buffer, std::mt19937_64& rng);
  /// target <- tau * online + (1 - tau) * target.
  void soft_update(double tau);

  GaussianActor actor;
  Mlp q1, q2, q1_target, q2_target;
  Adam actor_opt, q1_opt, q2_opt, alpha_opt;
  Eigen::VectorXd log_alpha;  // size 1

 private:
  SacConfig config_;
  double target_entropy_ = 0.0;
};

}  // namespace pentabot::agents
