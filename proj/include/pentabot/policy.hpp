#pragma once

#include <random>
#include <vector>

#include <Eigen/Core>

#include "pentabot/mlp.hpp"

namespace pentabot::agents {

inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;

/// Smooth clamp of an unconstrained value into [kLogStdMin, kLogStdMax].
double squash_log_std(double raw);
double squash_log_std_grad(double raw);
/// Inverse of squash_log_std for values strictly inside the range.
double unsquash_log_std(double log_std);

/// a = (tanh(u) + 1) / 2.
double squash_action(double u);

/// Log density of the squashed action given the pre-squash sample u, mean
/// and log-std: Gaussian term minus log|da/du| per component.
double squashed_log_prob(const Eigen::VectorXd& u, const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std);
/// Gaussian part only (what PPO ratios need; the squash term cancels).
double gaussian_log_prob(const Eigen::VectorXd& u, const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std);

enum class StdMode {
  kStateIndependent,  // log-std is a free parameter vector (PPO)
  kStateDependent,    // network emits mean and raw log-std (SAC)
};

/// Tanh-squashed Gaussian policy over [0, 1]^n.
class GaussianActor {
 public:
  GaussianActor() = default;
  GaussianActor(int obs_dim, int act_dim, std::vector<int> hidden, Activation activation, StdMode mode);

  int obs_dim() const { return net.spec().input; }
  int act_dim() const { return act_dim_; }
  StdMode mode() const { return mode_; }

  struct Dist {
    Eigen::MatrixXd mean;     // act x batch
    Eigen::MatrixXd raw_std;  // act x batch, before squash_log_std
    Eigen::MatrixXd log_std;  // act x batch
  };
  Dist distribution(const Eigen::MatrixXd& obs) const;
  Dist distribution(const Eigen::MatrixXd& obs, Mlp::Cache& cache) const;

  /// Squashed mean.
  Eigen::VectorXd act_deterministic(const Eigen::VectorXd& obs) const;

  struct Sample {
    Eigen::VectorXd action;  // in [0, 1]
    Eigen::VectorXd u;       // pre-squash
    double log_prob = 0.0;   // squashed density
    double gaussian_log_prob = 0.0;
  };
  Sample act_stochastic(const Eigen::VectorXd& obs, std::mt19937_64& rng) const;

  Mlp net;
  Eigen::VectorXd raw_log_std;  // state-independent mode only

 private:
  int act_dim_ = 0;
  StdMode mode_ = StdMode::kStateIndependent;
};

}  // namespace pentabot::agents
