#include "pentabot/sac.hpp"

#include <cmath>
#include <numbers>

#include "pentabot/errors.hpp"

namespace pentabot::agents {

void SacConfig::validate() const {
  if (alpha < 0.0) throw ConfigError("sac alpha must be non-negative");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("sac gamma must be in (0, 1]");
  if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("sac tau must be in [0, 1]");
  if (batch <= 0) throw ConfigError("sac batch must be positive");
  if (replay_capacity < static_cast<std::size_t>(batch)) throw ConfigError("replay capacity must be >= batch size");
  if (hidden.empty()) throw ConfigError("sac needs at least one hidden layer");
}

ReplayBuffer::ReplayBuffer(std::size_t capacity, int obs_dim, int act_dim)
    : capacity_(capacity),
      obs_(obs_dim, static_cast<Eigen::Index>(capacity)),
      action_(act_dim, static_cast<Eigen::Index>(capacity)),
      next_obs_(obs_dim, static_cast<Eigen::Index>(capacity)),
      reward_(static_cast<Eigen::Index>(capacity)),
      terminated_(static_cast<Eigen::Index>(capacity)) {
  if (capacity == 0) throw ConfigError("replay capacity must be positive");
}

void ReplayBuffer::add(const Transition& t) {
  if (t.obs.size() != obs_.rows() || t.next_obs.size() != obs_.rows() || t.action.size() != action_.rows()) {
    throw RangeError("transition shape mismatch");
  }
  const auto c = static_cast<Eigen::Index>(head_);
  obs_.col(c) = t.obs;
  action_.col(c) = t.action;
  next_obs_.col(c) = t.next_obs;
  reward_[c] = t.reward;
  terminated_[c] = t.terminated ? 1.0 : 0.0;
  head_ = (head_ + 1) % capacity_;
  if (size_ < capacity_) ++size_;
}

Transition ReplayBuffer::at(std::size_t i) const {
  if (i >= size_) throw RangeError("replay index out of range");
  const std::size_t oldest = size_ < capacity_ ? 0 : head_;
  const auto c = static_cast<Eigen::Index>((oldest + i) % capacity_);
  return {obs_.col(c), action_.col(c), reward_[c], next_obs_.col(c), terminated_[c] != 0.0};
}

ReplayBuffer::Batch ReplayBuffer::sample(int n, std::mt19937_64& rng) const {
  if (n <= 0 || size_ < static_cast<std::size_t>(n)) throw StateError("replay buffer holds fewer samples than the batch");
  std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
  Batch b;
  b.obs.resize(obs_.rows(), n);
  b.action.resize(action_.rows(), n);
  b.next_obs.resize(obs_.rows(), n);
  b.reward.resize(n);
  b.terminated.resize(n);
  for (int j = 0; j < n; ++j) {
    const auto c = static_cast<Eigen::Index>(pick(rng));
    b.obs.col(j) = obs_.col(c);
    b.action.col(j) = action_.col(c);
    b.next_obs.col(j) = next_obs_.col(c);
    b.reward[j] = reward_[c];
    b.terminated[j] = terminated_[c];
  }
  return b;
}

Eigen::MatrixXd critic_input(const Eigen::MatrixXd& obs, const Eigen::MatrixXd& action01) {
  Eigen::MatrixXd x(obs.rows() + action01.rows(), obs.cols());
  x.topRows(obs.rows()) = obs;
  x.bottomRows(action01.rows()) = (2.0 * action01.array() - 1.0).matrix();
  return x;
}

QLossResult sac_q_loss(const Mlp& q, const Eigen::MatrixXd& obs, const Eigen::MatrixXd& action01,
                       const Eigen::VectorXd& targets) {
  if (obs.cols() != targets.size() || action01.cols() != targets.size() || targets.size() == 0) {
    throw RangeError("q batch shape mismatch");
  }
  Mlp::Cache cache;
  const Eigen::MatrixXd v = q.forward(critic_input(obs, action01), cache);
  const Eigen::RowVectorXd diff = v.row(0) - targets.transpose();
  const double inv_n = 1.0 / static_cast<double>(targets.size());
  QLossResult r;
  r.loss = 0.5 * diff.squaredNorm() * inv_n;
  q.backward(cache, diff * inv_n, r.grad);
  return r;
}

SacPolicyLossResult sac_policy_loss(const GaussianActor& actor, const Mlp& q1, const Mlp& q2,
                                    const Eigen::MatrixXd& obs, const Eigen::MatrixXd& noise, double alpha) {
  const int a = actor.act_dim();
  const Eigen::Index n = obs.cols();
  if (noise.rows() != a || noise.cols() != n || n == 0) throw RangeError("policy noise shape mismatch");
  Mlp::Cache actor_cache;
  const auto dist = actor.distribution(obs, actor_cache);
  const Eigen::MatrixXd sigma = dist.log_std.array().exp().matrix();
  const Eigen::MatrixXd u = dist.mean + sigma.cwiseProduct(noise);
  const Eigen::MatrixXd y = u.array().tanh().matrix();
  const Eigen::MatrixXd action01 = (0.5 * (y.array() + 1.0)).matrix();

  Mlp::Cache c1, c2;
  const Eigen::MatrixXd x = critic_input(obs, action01);
  const Eigen::MatrixXd v1 = q1.forward(x, c1);
  const Eigen::MatrixXd v2 = q2.forward(x, c2);

  const double inv_n = 1.0 / static_cast<double>(n);
  SacPolicyLossResult r;
  Eigen::RowVectorXd pick1(n), pick2(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double lp = squashed_log_prob(u.col(i), dist.mean.col(i), dist.log_std.col(i));
    const bool first = v1(0, i) <= v2(0, i);
    r.loss += (alpha * lp - (first ? v1(0, i) : v2(0, i))) * inv_n;
    r.log_prob += lp * inv_n;
    pick1[i] = first ? -inv_n : 0.0;
    pick2[i] = first ? 0.0 : -inv_n;
  }
  // dL/d(critic input); the action rows are y = tanh(u).
  Eigen::VectorXd scratch1, scratch2;
  const Eigen::MatrixXd dx1 = q1.backward(c1, pick1, scratch1);
  const Eigen::MatrixXd dx2 = q2.backward(c2, pick2, scratch2);
  const Eigen::MatrixXd d_y = dx1.bottomRows(a) + dx2.bottomRows(a);

  // log pi = sum(-eps^2/2 - log_std - c) - sum(log(1 - tanh^2 u) - ln 2), eps fixed:
  // d/du = 2 tanh u; d/dlog_std (explicit) = -1.
  const Eigen::MatrixXd d_u = d_y.cwiseProduct((1.0 - y.array().square()).matrix()) + alpha * inv_n * 2.0 * y;
  const Eigen::MatrixXd d_mean = d_u;
  const Eigen::MatrixXd d_log_std =
      d_u.cwiseProduct(sigma.cwiseProduct(noise)) - Eigen::MatrixXd::Constant(a, n, alpha * inv_n);
  const Eigen::MatrixXd d_raw =
      d_log_std.cwiseProduct(dist.raw_std.unaryExpr([](double v) { return squash_log_std_grad(v); }));

  if (actor.mode() == StdMode::kStateDependent) {
    Eigen::MatrixXd d_out(2 * a, n);
    d_out.topRows(a) = d_mean;
    d_out.bottomRows(a) = d_raw;
    actor.net.backward(actor_cache, d_out, r.grad);
  } else {
    Eigen::VectorXd g_net;
    actor.net.backward(actor_cache, d_mean, g_net);
    r.grad.resize(g_net.size() + a);
    r.grad << g_net, d_raw.rowwise().sum();
  }
  return r;
}

SacAgent::SacAgent(int obs_dim, int act_dim, SacConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  std::mt19937_64 rng(seed);
  actor = GaussianActor(obs_dim, act_dim, config_.hidden, Activation::kRelu, StdMode::kStateDependent);
  actor.net.init(rng, 0.01);
  const MlpSpec qspec{obs_dim + act_dim, config_.hidden, 1, Activation::kRelu};
  q1 = Mlp(qspec);
  q2 = Mlp(qspec);
  q1.init(rng);
  q2.init(rng);
  q1_target = q1;
  q2_target = q2;
  actor_opt = Adam(actor.net.param_count(), config_.actor_lr);
  q1_opt = Adam(q1.param_count(), config_.critic_lr);
  q2_opt = Adam(q2.param_count(), config_.critic_lr);
  alpha_opt = Adam(1, config_.alpha_lr);
  log_alpha = Eigen::VectorXd::Constant(1, std::log(std::max(config_.alpha, 1e-300)));
  target_entropy_ = config_.target_entropy != 0.0 ? config_.target_entropy : -static_cast<double>(act_dim);
}

double SacAgent::alpha() const { return config_.alpha == 0.0 && !config_.auto_alpha ? 0.0 : std::exp(log_alpha[0]); }

void SacAgent::soft_update(double tau) {
  q1_target.params() = tau * q1.params() + (1.0 - tau) * q1_target.params();
  q2_target.params() = tau * q2.params() + (1.0 - tau) * q2_target.params();
}

SacStats SacAgent::update(const ReplayBuffer& buffer, std::mt19937_64& rng) {
  const auto b = buffer.sample(config_.batch, rng);
  const int a = actor.act_dim();
  const double alpha_now = alpha();
  std::normal_distribution<double> normal(0.0, 1.0);

  // Entropy-regularized targets from the current policy at s'.
  Eigen::MatrixXd next_noise(a, config_.batch);
  for (Eigen::Index j = 0; j < next_noise.cols(); ++j) {
    for (int k = 0; k < a; ++k) next_noise(k, j) = normal(rng);
  }
  const auto nd = actor.distribution(b.next_obs);
  const Eigen::MatrixXd nu = nd.mean + nd.log_std.array().exp().matrix().cwiseProduct(next_noise);
  const Eigen::MatrixXd na = nu.unaryExpr([](double u) { return squash_action(u); });
  const Eigen::MatrixXd nx = critic_input(b.next_obs, na);
  const Eigen::MatrixXd t1 = q1_target.forward(nx);
  const Eigen::MatrixXd t2 = q2_target.forward(nx);
  Eigen::VectorXd y(config_.batch);
  for (int j = 0; j < config_.batch; ++j) {
    const double lp = squashed_log_prob(nu.col(j), nd.mean.col(j), nd.log_std.col(j));
    const double soft_v = std::min(t1(0, j), t2(0, j)) - alpha_now * lp;
    y[j] = b.reward[j] + config_.gamma * (1.0 - b.terminated[j]) * soft_v;
  }

  SacStats s;
  auto l1 = sac_q_loss(q1, b.obs, b.action, y);
  auto l2 = sac_q_loss(q2, b.obs, b.action, y);
  if (!std::isfinite(l1.loss) || !std::isfinite(l2.loss)) throw DomainError("non-finite sac critic loss");
  q1_opt.step(q1.params(), l1.grad);
  q2_opt.step(q2.params(), l2.grad);
  s.q1_loss = l1.loss;
  s.q2_loss = l2.loss;

  Eigen::MatrixXd noise(a, config_.batch);
  for (Eigen::Index j = 0; j < noise.cols(); ++j) {
    for (int k = 0; k < a; ++k) noise(k, j) = normal(rng);
  }
  auto pl = sac_policy_loss(actor, q1, q2, b.obs, noise, alpha_now);
  if (!std::isfinite(pl.loss)) throw DomainError("non-finite sac policy loss");
  actor_opt.step(actor.net.params(), pl.grad);
  s.policy_loss = pl.loss;
  s.entropy = -pl.log_prob;

  if (config_.auto_alpha) {
    // J(log alpha) = -log alpha * (log pi + target entropy)
    Eigen::VectorXd g(1);
    g[0] = -(pl.log_prob + target_entropy_);
    alpha_opt.step(log_alpha, g);
  }
  s.alpha = alpha();
  soft_update(config_.tau);
  return s;
}

}  // namespace pentabot::agents
