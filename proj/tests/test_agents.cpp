#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "gradcheck.hpp"
#include "pentabot/errors.hpp"
#include "pentabot/gae.hpp"
#include "pentabot/mlp.hpp"
#include "pentabot/policy.hpp"
#include "pentabot/ppo.hpp"
#include "pentabot/sac.hpp"

using namespace pentabot;
using namespace pentabot::agents;

namespace {

using test::fd_check;
using test::random_matrix;

double gaussian_logp_cols(const GaussianActor& actor, const Eigen::MatrixXd& obs, const Eigen::MatrixXd& u, int i) {
  const auto d = actor.distribution(obs.col(i));
  return gaussian_log_prob(u.col(i), d.mean.col(0), d.log_std.col(0));
}

}  // namespace

TEST_CASE("mlp zero weights and identity layer") {
  Mlp zero(MlpSpec{3, {5}, 2, Activation::kTanh});
  zero.params().setZero();
  std::mt19937_64 rng(1);
  const Eigen::MatrixXd x = random_matrix(3, 4, rng);
  Mlp::Cache cache;
  const Eigen::MatrixXd out = zero.forward(x, cache);
  CHECK(out.isZero(0.0));
  for (const auto& pre : cache.pre) CHECK(pre.isZero(0.0));

  Mlp id(MlpSpec{3, {3}, 3, Activation::kIdentity});
  id.params().setZero();
  for (int l = 0; l < 2; ++l) id.weight(l, id.params()).setIdentity();
  CHECK(id.forward(x) == x);

  CHECK_THROWS_AS(zero.forward(random_matrix(4, 1, rng)), RangeError);
  CHECK_THROWS_AS(Mlp(MlpSpec{3, {}, 2, Activation::kTanh}), ConfigError);
  CHECK_THROWS_AS(Mlp(MlpSpec{3, {0}, 2, Activation::kTanh}), ConfigError);
}

TEST_CASE("mlp backward matches finite differences") {
  for (Activation act : {Activation::kTanh, Activation::kRelu}) {
    std::mt19937_64 rng(2);
    Mlp net(MlpSpec{4, {7, 6}, 3, act});
    net.init(rng);
    net.params() += 0.1 * random_matrix(net.param_count(), 1, rng);
    const Eigen::MatrixXd x = random_matrix(4, 5, rng);
    const Eigen::MatrixXd w = random_matrix(3, 5, rng);
    Mlp::Cache cache;
    net.forward(x, cache);
    Eigen::VectorXd grad;
    const Eigen::MatrixXd dx = net.backward(cache, w, grad);
    auto loss = [&] { return net.forward(x).cwiseProduct(w).sum(); };
    CHECK(fd_check(net.params(), grad, loss) < 1e-3);
    Eigen::MatrixXd xv = x;
    Eigen::Map<Eigen::VectorXd> flat(xv.data(), xv.size());
    Eigen::VectorXd xs = flat;
    const Eigen::VectorXd dxs = Eigen::Map<const Eigen::VectorXd>(dx.data(), dx.size());
    auto loss_x = [&] {
      Eigen::MatrixXd m = Eigen::Map<const Eigen::MatrixXd>(xs.data(), 4, 5);
      return net.forward(m).cwiseProduct(w).sum();
    };
    CHECK(fd_check(xs, dxs, loss_x) < 1e-3);
  }
}

TEST_CASE("log-std clamp and action squashing") {
  for (double raw : {-100.0, -3.0, 0.0, 3.0, 100.0}) {
    const double v = squash_log_std(raw);
    CHECK(v >= kLogStdMin);
    CHECK(v <= kLogStdMax);
  }
  CHECK(unsquash_log_std(squash_log_std(0.7)) == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(squash_action(0.0) == 0.5);
  CHECK(squash_action(50.0) <= 1.0);
  CHECK(squash_action(-50.0) >= 0.0);
}

TEST_CASE("ppo clipping arithmetic") {
  GaussianActor actor(2, 1, {4}, Activation::kTanh, StdMode::kStateIndependent);
  std::mt19937_64 rng(3);
  actor.net.init(rng);
  PpoBatch b;
  b.obs = random_matrix(2, 1, rng);
  b.u = random_matrix(1, 1, rng);
  const double logp = gaussian_logp_cols(actor, b.obs, b.u, 0);
  b.old_log_prob = Eigen::VectorXd::Constant(1, logp - std::log(1.5));
  b.advantages = Eigen::VectorXd::Constant(1, 0.8);
  b.returns = Eigen::VectorXd::Zero(1);
  auto r = ppo_policy_loss(actor, b, 0.2, 0.0);
  CHECK(r.surrogate == doctest::Approx(1.2 * 0.8).epsilon(1e-12));
  CHECK(r.clip_fraction == 1.0);
  CHECK(r.grad_net.isZero(0.0));
  // Negative advantage keeps the unclipped branch.
  b.advantages[0] = -0.8;
  r = ppo_policy_loss(actor, b, 0.2, 0.0);
  CHECK(r.surrogate == doctest::Approx(-1.5 * 0.8).epsilon(1e-12));

  b.advantages[0] = std::nan("");
  CHECK_THROWS_AS(ppo_policy_loss(actor, b, 0.2, 0.0), DomainError);
}

TEST_CASE("ppo ratio identity and vanilla policy gradient") {
  std::mt19937_64 rng(4);
  GaussianActor actor(5, 2, {8, 8}, Activation::kTanh, StdMode::kStateIndependent);
  actor.net.init(rng);
  actor.raw_log_std = random_matrix(2, 1, rng, 0.3);
  const int n = 16;
  PpoBatch b;
  b.obs = random_matrix(5, n, rng);
  b.u = random_matrix(2, n, rng);
  b.old_log_prob.resize(n);
  for (int i = 0; i < n; ++i) b.old_log_prob[i] = gaussian_logp_cols(actor, b.obs, b.u, i);
  b.advantages = random_matrix(n, 1, rng);
  normalize_advantages(b.advantages);
  CHECK(std::abs(b.advantages.mean()) < 1e-12);
  b.returns = Eigen::VectorXd::Zero(n);
  const auto r = ppo_policy_loss(actor, b, 0.2, 0.0);
  CHECK(r.approx_kl == 0.0);
  CHECK(r.clip_fraction == 0.0);
  // Every ratio is exactly one, so the surrogate is the mean advantage.
  CHECK(std::abs(r.surrogate - b.advantages.mean()) < 1e-15);
  // -mean(A * log pi) has the same gradient at theta = theta_old.
  auto vanilla = [&] {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s -= b.advantages[i] * gaussian_logp_cols(actor, b.obs, b.u, i);
    return s / n;
  };
  CHECK(fd_check(actor.net.params(), r.grad_net, vanilla) < 1e-3);
  CHECK(fd_check(actor.raw_log_std, r.grad_log_std, vanilla) < 1e-3);
}

TEST_CASE("ppo losses match finite differences off-policy") {
  std::mt19937_64 rng(5);
  for (StdMode mode : {StdMode::kStateIndependent, StdMode::kStateDependent}) {
    GaussianActor actor(4, 3, {8, 8}, Activation::kTanh, mode);
    actor.net.init(rng);
    actor.net.params() += 0.2 * random_matrix(actor.net.param_count(), 1, rng);
    if (mode == StdMode::kStateIndependent) actor.raw_log_std = random_matrix(3, 1, rng, 0.3);
    const int n = 16;
    PpoBatch b;
    b.obs = random_matrix(4, n, rng);
    // Actions drawn from the policy itself, as in a real rollout.
    const auto dist = actor.distribution(b.obs);
    b.u = dist.mean + dist.log_std.array().exp().matrix().cwiseProduct(random_matrix(3, n, rng));
    b.old_log_prob.resize(n);
    for (int i = 0; i < n; ++i) b.old_log_prob[i] = gaussian_logp_cols(actor, b.obs, b.u, i) + 0.05 * (i % 5 - 2);
    b.advantages = random_matrix(n, 1, rng);
    normalize_advantages(b.advantages);
    b.returns = Eigen::VectorXd::Zero(n);
    const auto r = ppo_policy_loss(actor, b, 0.2, 0.01);
    auto loss = [&] { return ppo_policy_loss(actor, b, 0.2, 0.01).loss; };
    CHECK(fd_check(actor.net.params(), r.grad_net, loss) < 1e-3);
    if (mode == StdMode::kStateIndependent) CHECK(fd_check(actor.raw_log_std, r.grad_log_std, loss) < 1e-3);
  }
  Mlp critic(MlpSpec{4, {8, 8}, 1, Activation::kTanh});
  critic.init(rng);
  const Eigen::MatrixXd obs = random_matrix(4, 16, rng);
  const Eigen::VectorXd ret = random_matrix(16, 1, rng);
  const auto v = value_loss(critic, obs, ret);
  CHECK(fd_check(critic.params(), v.grad, [&] { return value_loss(critic, obs, ret).loss; }) < 1e-3);
}

TEST_CASE("gae recursion") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int n = 50;
  std::vector<double> r(n), v(n + 1);
  std::vector<bool> term(n, false);
  for (auto& x : r) x = u(rng);
  for (auto& x : v) x = u(rng);
  for (int t = 7; t < n; t += 13) term[t] = true;
  const double gamma = 0.97;

  SUBCASE("lambda 0 gives one-step TD residuals") {
    const auto g = gae_advantages(r, v, term, gamma, 0.0);
    for (int t = 0; t < n; ++t) {
      const double next = term[t] ? 0.0 : v[t + 1];
      CHECK(std::abs(g.advantages[t] - (r[t] + gamma * next - v[t])) < 1e-15);
      CHECK(g.returns[t] == g.advantages[t] + v[t]);
    }
  }
  SUBCASE("lambda 1, gamma 1, zero values gives reward-to-go") {
    std::vector<double> zeros(n + 1, 0.0);
    const auto g = gae_advantages(r, zeros, std::vector<bool>(n, false), 1.0, 1.0);
    for (int t = 0; t < n; ++t) {
      double togo = 0.0;
      for (int k = t; k < n; ++k) togo += r[k];
      CHECK(std::abs(g.advantages[t] - togo) < 1e-12);
    }
  }
  SUBCASE("matches the brute-force double sum") {
    const double lambda = 0.9;
    const auto g = gae_advantages(r, v, term, gamma, lambda);
    for (int t = 0; t < n; ++t) {
      double a = 0.0, w = 1.0;
      for (int k = t; k < n; ++k) {
        const double next = term[k] ? 0.0 : v[k + 1];
        a += w * (r[k] + gamma * next - v[k]);
        if (term[k]) break;
        w *= gamma * lambda;
      }
      CHECK(std::abs(g.advantages[t] - a) < 1e-12);
    }
  }
  CHECK_THROWS_AS(gae_advantages(r, r, term, gamma, 0.9), RangeError);
}

TEST_CASE("actions are in range and deterministic mode is pure") {
  std::mt19937_64 rng(7);
  for (StdMode mode : {StdMode::kStateIndependent, StdMode::kStateDependent}) {
    GaussianActor actor(3, 4, {8}, Activation::kRelu, mode);
    actor.net.init(rng);
    actor.net.params() *= 20.0;  // saturate the squash
    for (int i = 0; i < 500; ++i) {
      const Eigen::VectorXd obs = random_matrix(3, 1, rng, 3.0);
      const auto s = actor.act_stochastic(obs, rng);
      CHECK(s.action.minCoeff() >= 0.0);
      CHECK(s.action.maxCoeff() <= 1.0);
      CHECK(std::isfinite(s.log_prob));
      CHECK(actor.act_deterministic(obs) == actor.act_deterministic(obs));
    }
  }
}

TEST_CASE("stochastic samples converge to the squashed distribution") {
  // The mean of tanh-squashed samples is E[(tanh(u)+1)/2], which differs from
  // the squashed mean unless the mean is zero, so it is compared against a
  // quadrature of the same expectation; the median is the squashed mean.
  std::mt19937_64 rng(8);
  GaussianActor actor(2, 2, {8}, Activation::kTanh, StdMode::kStateIndependent);
  actor.net.init(rng);
  actor.net.params() += 0.5 * random_matrix(actor.net.param_count(), 1, rng);
  actor.raw_log_std.setConstant(unsquash_log_std(-0.7));
  const Eigen::VectorXd obs = random_matrix(2, 1, rng);
  const auto d = actor.distribution(obs);
  const int n = 10000;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(2), sq = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd below = Eigen::VectorXd::Zero(2);
  const Eigen::VectorXd det = actor.act_deterministic(obs);
  for (int i = 0; i < n; ++i) {
    const auto s = actor.act_stochastic(obs, rng);
    sum += s.action;
    sq += s.action.cwiseProduct(s.action);
    for (int k = 0; k < 2; ++k) below[k] += s.action[k] < det[k] ? 1.0 : 0.0;
  }
  for (int k = 0; k < 2; ++k) {
    const double mu = d.mean(k, 0), sigma = std::exp(d.log_std(k, 0));
    double expect = 0.0;
    const int steps = 20000;
    for (int j = 0; j < steps; ++j) {
      const double z = -8.0 + 16.0 * (j + 0.5) / steps;
      const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
      expect += squash_action(mu + sigma * z) * pdf * 16.0 / steps;
    }
    const double mean = sum[k] / n;
    const double se = std::sqrt((sq[k] / n - mean * mean) / n);
    CHECK(std::abs(mean - expect) < 3.0 * se);
    CHECK(det[k] == squash_action(mu));
    CHECK(std::abs(below[k] / n - 0.5) < 3.0 * 0.5 / std::sqrt(double(n)));
  }
}

TEST_CASE("replay buffer eviction and sampling") {
  ReplayBuffer buf(3, 1, 1);
  for (int i = 0; i < 5; ++i) {
    Transition t;
    t.obs = Eigen::VectorXd::Constant(1, i);
    t.action = Eigen::VectorXd::Constant(1, 0.5);
    t.reward = i;
    t.next_obs = Eigen::VectorXd::Constant(1, i + 1);
    t.terminated = i % 2 == 0;
    buf.add(t);
  }
  CHECK(buf.size() == 3);
  CHECK(buf.at(0).reward == 2.0);
  CHECK(buf.at(2).reward == 4.0);
  CHECK(buf.at(1).terminated == false);
  std::mt19937_64 a(9), b(9);
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(3);
  for (int i = 0; i < 1000; ++i) {
    const auto sa = buf.sample(3, a);
    const auto sb = buf.sample(3, b);
    CHECK(sa.reward == sb.reward);
    CHECK((sa.obs.array() + 1.0 == sa.next_obs.array()).all());
    for (int k = 0; k < 3; ++k) counts[static_cast<int>(sa.reward[k]) - 2] += 1.0;
  }
  for (int k = 0; k < 3; ++k) CHECK(std::abs(counts[k] - 1000.0) < 4.0 * std::sqrt(3000.0 * (1.0 / 3.0) * (2.0 / 3.0)));
  const auto sa = buf.sample(3, a);
  CHECK((sa.obs.array() + 1.0 == sa.next_obs.array()).all());
  ReplayBuffer empty(3, 1, 1);
  CHECK_THROWS_AS(empty.sample(1, a), StateError);
  Transition bad;
  bad.obs = Eigen::VectorXd::Zero(2);
  bad.action = Eigen::VectorXd::Zero(1);
  bad.next_obs = Eigen::VectorXd::Zero(2);
  CHECK_THROWS_AS(empty.add(bad), RangeError);
}

TEST_CASE("sac losses match finite differences") {
  std::mt19937_64 rng(10);
  GaussianActor actor(3, 2, {8, 8}, Activation::kRelu, StdMode::kStateDependent);
  actor.net.init(rng);
  Mlp q1(MlpSpec{5, {8, 8}, 1, Activation::kRelu}), q2(MlpSpec{5, {8, 8}, 1, Activation::kRelu});
  q1.init(rng);
  q2.init(rng);
  // Nonzero biases keep pre-activations off the ReLU kink.
  for (Mlp* m : {&actor.net, &q1, &q2}) m->params() += 0.1 * random_matrix(m->param_count(), 1, rng);
  const int n = 16;
  const Eigen::MatrixXd obs = random_matrix(3, n, rng);
  const Eigen::MatrixXd noise = random_matrix(2, n, rng);
  Eigen::MatrixXd act = random_matrix(2, n, rng).unaryExpr([](double x) { return squash_action(x); });
  const Eigen::VectorXd y = random_matrix(n, 1, rng);

  const auto ql = sac_q_loss(q1, obs, act, y);
  CHECK(fd_check(q1.params(), ql.grad, [&] { return sac_q_loss(q1, obs, act, y).loss; }) < 1e-3);

  const double alpha = 0.2;
  const auto pl = sac_policy_loss(actor, q1, q2, obs, noise, alpha);
  CHECK(fd_check(actor.net.params(), pl.grad, [&] { return sac_policy_loss(actor, q1, q2, obs, noise, alpha).loss; }) <
        1e-3);

  // alpha = 0 drops the entropy term entirely.
  const auto p0 = sac_policy_loss(actor, q1, q2, obs, noise, 0.0);
  CHECK(p0.loss == doctest::Approx(pl.loss - alpha * pl.log_prob).epsilon(1e-12));
  CHECK(fd_check(actor.net.params(), p0.grad, [&] { return sac_policy_loss(actor, q1, q2, obs, noise, 0.0).loss; }) <
        1e-3);
}

TEST_CASE("sac target copy and config checks") {
  SacConfig cfg;
  cfg.tau = 1.0;
  cfg.batch = 8;
  cfg.hidden = {8};
  SacAgent agent(2, 1, cfg, 11);
  ReplayBuffer buf(100, 2, 1);
  std::mt19937_64 rng(11);
  CHECK_THROWS_AS(agent.update(buf, rng), StateError);
  for (int i = 0; i < 20; ++i) {
    Transition t{random_matrix(2, 1, rng), Eigen::VectorXd::Constant(1, 0.3), 1.0, random_matrix(2, 1, rng), false};
    buf.add(t);
  }
  agent.update(buf, rng);
  CHECK(agent.q1_target.params() == agent.q1.params());
  CHECK(agent.q2_target.params() == agent.q2.params());

  SacConfig bad;
  bad.alpha = -0.1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = SacConfig{};
  bad.replay_capacity = 10;
  bad.batch = 20;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  PpoConfig ppo;
  ppo.clip = 1.0;
  CHECK_THROWS_AS(ppo.validate(), ConfigError);
}

TEST_CASE("sac solves a single-state quadratic bandit") {
  // r = -(a - 0.7)^2 with terminal transitions: the greedy optimum is 0.7.
  SacConfig cfg;
  cfg.alpha = 0.001;
  cfg.batch = 64;
  cfg.hidden = {32, 32};
  cfg.actor_lr = 1e-3;
  cfg.critic_lr = 1e-3;
  SacAgent agent(1, 1, cfg, 12);
  ReplayBuffer buf(10000, 1, 1);
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Eigen::VectorXd s = Eigen::VectorXd::Ones(1);
  for (int i = 0; i < 5000; ++i) {
    const double a = u(rng);
    buf.add(Transition{s, Eigen::VectorXd::Constant(1, a), -(a - 0.7) * (a - 0.7), s, true});
  }
  for (int i = 0; i < 5000; ++i) agent.update(buf, rng);
  const double mean = agent.actor.act_deterministic(s)[0];
  MESSAGE("bandit policy mean " << mean);
  CHECK(std::abs(mean - 0.7) < 0.05);
}
