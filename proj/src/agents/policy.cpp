#include "pentabot/policy.hpp"

#include <cmath>
#include <numbers>

#include "pentabot/errors.hpp"

namespace pentabot::agents {

namespace {

constexpr double kHalfSpan = 0.5 * (kLogStdMax - kLogStdMin);
const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

// log(1 - tanh(u)^2) without cancellation for large |u|.
double log_one_minus_tanh2(double u) {
  const double a = std::abs(u);
  return 2.0 * (std::numbers::ln2 - a - std::log1p(std::exp(-2.0 * a)));
}

}  // namespace

double squash_log_std(double raw) { return kLogStdMin + kHalfSpan * (std::tanh(raw) + 1.0); }

double squash_log_std_grad(double raw) {
  const double t = std::tanh(raw);
  return kHalfSpan * (1.0 - t * t);
}

double unsquash_log_std(double log_std) {
  const double y = (log_std - kLogStdMin) / kHalfSpan - 1.0;
  if (!(y > -1.0 && y < 1.0)) throw DomainError("log-std outside the open clamp range");
  return std::atanh(y);
}

double squash_action(double u) { return 0.5 * (std::tanh(u) + 1.0); }

double gaussian_log_prob(const Eigen::VectorXd& u, const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std) {
  double lp = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double z = (u[i] - mean[i]) * std::exp(-log_std[i]);
    lp += -0.5 * z * z - log_std[i] - kHalfLog2Pi;
  }
  return lp;
}

double squashed_log_prob(const Eigen::VectorXd& u, const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std) {
  double lp = gaussian_log_prob(u, mean, log_std);
  // da/du = (1 - tanh^2 u) / 2
  for (Eigen::Index i = 0; i < u.size(); ++i) lp -= log_one_minus_tanh2(u[i]) - std::numbers::ln2;
  return lp;
}

GaussianActor::GaussianActor(int obs_dim, int act_dim, std::vector<int> hidden, Activation activation,
                             StdMode mode)
    : act_dim_(act_dim), mode_(mode) {
  if (act_dim <= 0) throw ConfigError("action dimension must be positive");
  const int out = mode == StdMode::kStateDependent ? 2 * act_dim : act_dim;
  net = Mlp(MlpSpec{obs_dim, std::move(hidden), out, activation});
  if (mode == StdMode::kStateIndependent) raw_log_std = Eigen::VectorXd::Constant(act_dim, unsquash_log_std(-0.5));
}

GaussianActor::Dist GaussianActor::distribution(const Eigen::MatrixXd& obs) const {
  Mlp::Cache cache;
  return distribution(obs, cache);
}

GaussianActor::Dist GaussianActor::distribution(const Eigen::MatrixXd& obs, Mlp::Cache& cache) const {
  const Eigen::MatrixXd out = net.forward(obs, cache);
  Dist d;
  d.mean = out.topRows(act_dim_);
  if (mode_ == StdMode::kStateDependent) {
    d.raw_std = out.bottomRows(act_dim_);
  } else {
    d.raw_std = raw_log_std.replicate(1, obs.cols());
  }
  d.log_std = d.raw_std.unaryExpr([](double r) { return squash_log_std(r); });
  return d;
}

Eigen::VectorXd GaussianActor::act_deterministic(const Eigen::VectorXd& obs) const {
  const Eigen::MatrixXd out = net.forward(obs);
  return out.topRows(act_dim_).col(0).unaryExpr([](double u) { return squash_action(u); });
}

GaussianActor::Sample GaussianActor::act_stochastic(const Eigen::VectorXd& obs, std::mt19937_64& rng) const {
  const Dist d = distribution(obs);
  std::normal_distribution<double> normal(0.0, 1.0);
  Sample s;
  s.u.resize(act_dim_);
  for (int i = 0; i < act_dim_; ++i) s.u[i] = d.mean(i, 0) + std::exp(d.log_std(i, 0)) * normal(rng);
  s.action = s.u.unaryExpr([](double u) { return squash_action(u); });
  s.gaussian_log_prob = gaussian_log_prob(s.u, d.mean.col(0), d.log_std.col(0));
  s.log_prob = squashed_log_prob(s.u, d.mean.col(0), d.log_std.col(0));
  return s;
}

}  // namespace pentabot::agents
