#include "pentabot/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "pentabot/errors.hpp"
#include "pentabot/gae.hpp"

namespace pentabot::agents {

void PpoConfig::validate() const {
  if (!(clip > 0.0 && clip < 1.0)) throw ConfigError("ppo clip must be in (0, 1)");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("ppo gamma must be in (0, 1]");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("ppo lambda must be in [0, 1]");
  if (epochs <= 0 || minibatch <= 0 || rollout <= 0) throw ConfigError("ppo epochs/minibatch/rollout must be positive");
  if (actor_lr < 0.0 || critic_lr < 0.0) throw ConfigError("ppo learning rates must be non-negative");
  if (hidden.empty()) throw ConfigError("ppo needs at least one hidden layer");
}

PolicyLossResult ppo_policy_loss(const GaussianActor& actor, const PpoBatch& batch, double clip,
                                 double entropy_coef) {
  const Eigen::Index n = batch.obs.cols();
  const int a = actor.act_dim();
  if (n == 0) throw RangeError("empty ppo batch");
  if (batch.u.rows() != a || batch.u.cols() != n || batch.old_log_prob.size() != n || batch.advantages.size() != n) {
    throw RangeError("ppo batch shape mismatch");
  }
  if (!batch.obs.allFinite() || !batch.u.allFinite() || !batch.old_log_prob.allFinite() ||
      !batch.advantages.allFinite()) {
    throw DomainError("non-finite value in ppo batch");
  }

  Mlp::Cache cache;
  const auto dist = actor.distribution(batch.obs, cache);
  const double half_log_2pi_e = 0.5 * (1.0 + std::log(2.0 * std::numbers::pi));

  PolicyLossResult r;
  Eigen::MatrixXd d_mean(a, n), d_log_std(a, n);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    // Same routine as at collection time, so theta == theta_old gives ratio 1 exactly.
    const double logp = gaussian_log_prob(batch.u.col(i), dist.mean.col(i), dist.log_std.col(i));
    const double log_ratio = logp - batch.old_log_prob[i];
    const double ratio = std::exp(log_ratio);
    const double adv = batch.advantages[i];
    const double unclipped = ratio * adv;
    const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip) * adv;
    r.surrogate += std::min(unclipped, clipped) * inv_n;
    r.approx_kl += ((ratio - 1.0) - log_ratio) * inv_n;
    if (std::abs(ratio - 1.0) > clip) r.clip_fraction += inv_n;

    // d(-surrogate)/d logp; zero when the clipped branch is strictly smaller.
    const double g = unclipped <= clipped ? -adv * ratio * inv_n : 0.0;
    for (int k = 0; k < a; ++k) {
      const double sigma2 = std::exp(2.0 * dist.log_std(k, i));
      const double diff = batch.u(k, i) - dist.mean(k, i);
      d_mean(k, i) = g * diff / sigma2;
      // entropy of each component is log_std + const
      d_log_std(k, i) = g * (diff * diff / sigma2 - 1.0) - entropy_coef * inv_n;
      r.entropy += (dist.log_std(k, i) + half_log_2pi_e) * inv_n;
    }
  }
  r.loss = -r.surrogate - entropy_coef * r.entropy;

  Eigen::MatrixXd d_raw = d_log_std.cwiseProduct(dist.raw_std.unaryExpr([](double x) { return squash_log_std_grad(x); }));
  Eigen::MatrixXd d_out;
  if (actor.mode() == StdMode::kStateDependent) {
    d_out.resize(2 * a, n);
    d_out.topRows(a) = d_mean;
    d_out.bottomRows(a) = d_raw;
  } else {
    d_out = d_mean;
    r.grad_log_std = d_raw.rowwise().sum();
  }
  actor.net.backward(cache, d_out, r.grad_net);
  return r;
}

ValueLossResult value_loss(const Mlp& critic, const Eigen::MatrixXd& obs, const Eigen::VectorXd& returns) {
  if (obs.cols() != returns.size() || returns.size() == 0) throw RangeError("value batch shape mismatch");
  if (!obs.allFinite() || !returns.allFinite()) throw DomainError("non-finite value in value batch");
  Mlp::Cache cache;
  const Eigen::MatrixXd v = critic.forward(obs, cache);
  const Eigen::RowVectorXd diff = v.row(0) - returns.transpose();
  const double inv_n = 1.0 / static_cast<double>(returns.size());
  ValueLossResult r;
  r.loss = 0.5 * diff.squaredNorm() * inv_n;
  critic.backward(cache, diff * inv_n, r.grad);
  return r;
}

void normalize_advantages(Eigen::VectorXd& adv) {
  if (adv.size() == 0) return;
  const double mean = adv.mean();
  adv.array() -= mean;
  if (adv.size() < 2) return;
  const double sd = std::sqrt(adv.squaredNorm() / static_cast<double>(adv.size()));
  adv /= sd + 1e-8;
}

PpoAgent::PpoAgent(int obs_dim, int act_dim, PpoConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  std::mt19937_64 rng(seed);
  actor = GaussianActor(obs_dim, act_dim, config_.hidden, Activation::kTanh, StdMode::kStateIndependent);
  actor.net.init(rng, 0.01);
  actor.raw_log_std.setConstant(unsquash_log_std(config_.init_log_std));
  critic = Mlp(MlpSpec{obs_dim, config_.hidden, 1, Activation::kTanh});
  critic.init(rng, 1.0);
  actor_opt = Adam(actor.net.param_count(), config_.actor_lr);
  log_std_opt = Adam(act_dim, config_.actor_lr);
  critic_opt = Adam(critic.param_count(), config_.critic_lr);
}

double PpoAgent::value(const Eigen::VectorXd& obs) const { return critic.forward(obs)(0, 0); }

PpoStats PpoAgent::update(const PpoRollout& ro, std::mt19937_64& rng) {
  const Eigen::Index n = ro.obs.cols();
  if (n == 0 || ro.u.cols() != n || ro.log_prob.size() != n) throw RangeError("ppo rollout shape mismatch");
  const GaeResult gae = gae_advantages(ro.rewards, ro.values, ro.terminals, config_.gamma, config_.lambda);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const Eigen::Index mb = std::min<Eigen::Index>(config_.minibatch, n);

  PpoStats stats;
  for (int epoch = 0; epoch < config_.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_kl = 0.0;
    int epoch_batches = 0;
    for (Eigen::Index start = 0; start + mb <= n; start += mb) {
      PpoBatch b;
      b.obs.resize(ro.obs.rows(), mb);
      b.u.resize(ro.u.rows(), mb);
      b.old_log_prob.resize(mb);
      b.advantages.resize(mb);
      b.returns.resize(mb);
      for (Eigen::Index j = 0; j < mb; ++j) {
        const Eigen::Index s = order[static_cast<std::size_t>(start + j)];
        b.obs.col(j) = ro.obs.col(s);
        b.u.col(j) = ro.u.col(s);
        b.old_log_prob[j] = ro.log_prob[s];
        b.advantages[j] = gae.advantages[static_cast<std::size_t>(s)];
        b.returns[j] = gae.returns[static_cast<std::size_t>(s)];
      }
      normalize_advantages(b.advantages);

      PolicyLossResult pl = ppo_policy_loss(actor, b, config_.clip, config_.entropy_coef);
      ValueLossResult vl = value_loss(critic, b.obs, b.returns);
      if (!std::isfinite(pl.loss) || !std::isfinite(vl.loss)) throw DomainError("non-finite ppo loss");

      Eigen::VectorXd g(pl.grad_net.size() + pl.grad_log_std.size());
      g << pl.grad_net, pl.grad_log_std;
      clip_grad_norm(g, config_.max_grad_norm);
      Eigen::VectorXd g_net = g.head(pl.grad_net.size());
      Eigen::VectorXd g_std = g.tail(pl.grad_log_std.size());
      actor_opt.step(actor.net.params(), g_net);
      log_std_opt.step(actor.raw_log_std, g_std);
      clip_grad_norm(vl.grad, config_.max_grad_norm);
      critic_opt.step(critic.params(), vl.grad);

      stats.policy_loss += pl.loss;
      stats.value_loss += vl.loss;
      stats.entropy += pl.entropy;
      stats.approx_kl += pl.approx_kl;
      stats.clip_fraction += pl.clip_fraction;
      ++stats.minibatches;
      epoch_kl += pl.approx_kl;
      ++epoch_batches;
    }
    if (config_.target_kl > 0.0 && epoch_batches > 0 && epoch_kl / epoch_batches > 1.5 * config_.target_kl) break;
  }
  if (stats.minibatches > 0) {
    const double k = 1.0 / stats.minibatches;
    stats.policy_loss *= k;
    stats.value_loss *= k;
    stats.entropy *= k;
    stats.approx_kl *= k;
    stats.clip_fraction *= k;
  }
  return stats;
}

}  // namespace pentabot::agents
