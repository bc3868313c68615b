#include "pentabot/training.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include <json.hpp>

#include "pentabot/errors.hpp"
#include "pentabot/simulator.hpp"

namespace pentabot::training {

using agents::GaussianActor;

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a * 0x9E3779B97F4A7C15ull + b + 0x632BE59BD9B4E019ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

void RunConfig::validate() const {
  if (algorithm != "ppo" && algorithm != "sac") throw ConfigError("algorithm must be 'ppo' or 'sac'");
  if (total_steps <= 0) throw ConfigError("total_steps must be positive");
  if (eval_interval <= 0 || eval_interval > total_steps) throw ConfigError("eval_interval must be in (0, total_steps]");
  if (eval_episodes <= 0) throw ConfigError("eval_episodes must be positive");
  if (sac_warmup < 0) throw ConfigError("sac_warmup must be non-negative");
  env::validate(curriculum);
  ppo.validate();
  sac.validate();
  sim::preset_scene(scenario);
}

SceneConfig run_scene(const RunConfig& config) {
  SceneConfig scene = sim::preset_scene(config.scenario);
  scene.remap.enabled = config.remap;
  if (config.drag) scene.drag = *config.drag;
  validate(scene);
  return scene;
}

double relative_error(double mean_abs_error_m, double range_m) {
  if (!(range_m > 0.0)) throw DomainError("range must be positive");
  return mean_abs_error_m / range_m;
}

namespace {

// Accumulates hold-quality samples; shared by evaluate and transport_eval.
class HoldTracker {
 public:
  HoldTracker(const SceneConfig& scene, HoldCriteria hold, env::RewardParams reward)
      : scene_(scene), hold_(hold), reward_(reward) {}

  void begin_target() {
    seg_steps_ = 0;
    run_ = 0;
    held_ = false;
  }

  void sample(const Vec3& error, double speed_mm_s) {
    ++seg_steps_;
    ++all_steps_;
    reward_sum_ += env::reward_fn(error.norm(), speed_mm_s, reward_);
    if (error.norm() <= hold_.sigma_p && speed_mm_s < hold_.sigma_v) {
      if (++run_ >= kHoldSteps) held_ = true;
    } else {
      run_ = 0;
    }
    if (seg_steps_ > kSettleSteps) add_error(error, speed_mm_s);
  }

  /// Target finished; short targets are dropped unless cut by a failure.
  void end_target(bool failed) {
    if (seg_steps_ >= kHoldSteps || failed) {
      ++targets_;
      if (held_ && !failed) ++held_count_;
    }
    seg_steps_ = 0;
  }

  /// Failure fill-in: the frozen error counts for steps that will not run.
  void fill(const Vec3& error, int steps_in_segment_so_far, int segment_length) {
    for (int k = steps_in_segment_so_far + 1; k <= segment_length; ++k) {
      if (k > kSettleSteps) add_error(error, 0.0);
    }
  }

  /// A whole target lost to an earlier failure.
  void fail_segment(const Vec3& error, int length) {
    fill(error, 0, length);
    if (length >= kHoldSteps) ++targets_;
  }

  EvalReport report(int episodes, int exits) const {
    EvalReport r;
    r.episodes = episodes;
    r.targets = targets_;
    r.workspace_exits = exits;
    r.success_rate = targets_ ? static_cast<double>(held_count_) / targets_ : 0.0;
    r.mean_reward = all_steps_ ? reward_sum_ / all_steps_ : 0.0;
    if (samples_ > 0) {
      const Vec3 ext = scene_.workspace.extent();
      for (int a = 0; a < scene_.spatial_dims(); ++a) r.relative_error[a] = relative_error(abs_sum_[a] / samples_, ext[a]);
      r.max_relative_error = r.relative_error.head(scene_.spatial_dims()).maxCoeff();
      r.mean_error_m = err_sum_ / samples_;
      r.mean_speed_mm_s = speed_sum_ / samples_;
    }
    return r;
  }

 private:
  void add_error(const Vec3& e, double speed) {
    abs_sum_ += e.cwiseAbs();
    err_sum_ += e.norm();
    speed_sum_ += speed;
    ++samples_;
  }

  const SceneConfig& scene_;
  HoldCriteria hold_;
  env::RewardParams reward_;
  int seg_steps_ = 0;
  int run_ = 0;
  bool held_ = false;
  int targets_ = 0;
  int held_count_ = 0;
  long long samples_ = 0;
  long long all_steps_ = 0;
  Vec3 abs_sum_ = Vec3::Zero();
  double err_sum_ = 0.0;
  double speed_sum_ = 0.0;
  double reward_sum_ = 0.0;
};

env::RewardParams final_reward(const HoldCriteria& hold) { return {1.0, hold.sigma_p, hold.sigma_v}; }

}  // namespace

EvalReport evaluate_actor(const GaussianActor& actor, const SceneConfig& scene, const env::EpisodeConfig& episode,
                          int n_episodes, std::uint64_t seed, const HoldCriteria& hold) {
  if (n_episodes <= 0) throw DomainError("n_episodes must be positive");
  env::MaglevEnv e(scene, episode, final_reward(hold));
  if (actor.obs_dim() != e.observation_dim() || actor.act_dim() != e.action_dim()) {
    throw ConfigError("policy dimensions do not match the scenario");
  }
  HoldTracker tracker(scene, hold, final_reward(hold));
  int exits = 0;
  const int interval = episode.target_resample_interval;
  const int max_steps = episode.max_steps;
  for (int ep = 0; ep < n_episodes; ++ep) {
    e.reset(mix_seed(seed, static_cast<std::uint64_t>(ep)));
    tracker.begin_target();
    int seg_start = 0;
    while (!e.done()) {
      const Vec3 target = e.target();
      const Eigen::VectorXd a = actor.act_deterministic(e.observation().flat());
      const auto out = e.step(std::span<const double>(a.data(), static_cast<std::size_t>(a.size())));
      const Vec3 err = e.state().position - target;
      tracker.sample(err, out.info.speed_mm_s);
      if (out.terminated) {
        ++exits;
        tracker.fill(err, e.steps() - seg_start, std::min(interval, max_steps - seg_start));
        tracker.end_target(true);
        for (int s = seg_start + interval; s < max_steps; s += interval) tracker.fail_segment(err, std::min(interval, max_steps - s));
      } else if (out.truncated || out.info.target_resampled) {
        tracker.end_target(false);
        tracker.begin_target();
        seg_start = e.steps();
      }
    }
  }
  return tracker.report(n_episodes, exits);
}

EvalReport evaluate(const agents::PolicyCheckpoint& checkpoint, const std::string& scenario, int n_episodes,
                    std::uint64_t seed, bool remap) {
  if (n_episodes <= 0) throw DomainError("n_episodes must be positive");
  SceneConfig scene = sim::preset_scene(scenario);
  scene.remap.enabled = remap;
  return evaluate_actor(checkpoint.actor(), scene, env::default_episode_config(scene), n_episodes, seed);
}

void write_metrics_header(std::ostream& out) {
  out << "global_step,sigma_p,sigma_v,mean_reward,mean_error_m,mean_speed_mm_s,success_rate,relative_error,"
         "workspace_exits\n";
}

void write_metrics_row(std::ostream& out, const MetricsRow& row) {
  char buf[320];
  std::snprintf(buf, sizeof buf, "%lld,%.6g,%.6g,%.9f,%.9f,%.9f,%.6f,%.9f,%d\n", row.global_step, row.sigma_p,
                row.sigma_v, row.eval.mean_reward, row.eval.mean_error_m, row.eval.mean_speed_mm_s,
                row.eval.success_rate, row.eval.max_relative_error, row.eval.workspace_exits);
  out << buf;
}

namespace {

nlohmann::ordered_json manifest(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["algorithm"] = c.algorithm;
  j["scenario"] = c.scenario;
  j["total_steps"] = c.total_steps;
  j["seed"] = c.seed;
  j["eval_interval"] = c.eval_interval;
  j["eval_episodes"] = c.eval_episodes;
  j["remap"] = c.remap;
  if (c.drag) j["drag"] = *c.drag;
  else j["drag"] = nullptr;
  auto& cur = j["curriculum"] = nlohmann::ordered_json::array();
  for (const auto& p : c.curriculum) cur.push_back({{"steps", p.steps}, {"sigma_p", p.sigma_p}, {"sigma_v", p.sigma_v}});
  j["ppo"] = {{"clip", c.ppo.clip},         {"gamma", c.ppo.gamma},           {"lambda", c.ppo.lambda},
              {"epochs", c.ppo.epochs},     {"minibatch", c.ppo.minibatch},   {"rollout", c.ppo.rollout},
              {"actor_lr", c.ppo.actor_lr}, {"critic_lr", c.ppo.critic_lr},   {"entropy_coef", c.ppo.entropy_coef},
              {"max_grad_norm", c.ppo.max_grad_norm}, {"target_kl", c.ppo.target_kl},
              {"init_log_std", c.ppo.init_log_std},   {"anneal_lr", c.ppo.anneal_lr},
              {"hidden", c.ppo.hidden}};
  j["sac"] = {{"alpha", c.sac.alpha},         {"auto_alpha", c.sac.auto_alpha}, {"target_entropy", c.sac.target_entropy},
              {"gamma", c.sac.gamma},         {"tau", c.sac.tau},               {"replay_capacity", c.sac.replay_capacity},
              {"batch", c.sac.batch},         {"actor_lr", c.sac.actor_lr},     {"critic_lr", c.sac.critic_lr},
              {"alpha_lr", c.sac.alpha_lr},   {"hidden", c.sac.hidden},         {"warmup", c.sac_warmup}};
  return j;
}

void dump_rollout(const std::filesystem::path& path, const agents::PpoRollout& ro) {
  std::ofstream out(path);
  out << "index,reward,value,terminal,log_prob";
  for (Eigen::Index k = 0; k < ro.u.rows(); ++k) out << ",u" << k;
  for (Eigen::Index k = 0; k < ro.obs.rows(); ++k) out << ",obs" << k;
  out << "\n";
  for (Eigen::Index i = 0; i < ro.obs.cols(); ++i) {
    out << i << ',' << ro.rewards[static_cast<std::size_t>(i)] << ',' << ro.values[static_cast<std::size_t>(i)] << ','
        << ro.terminals[static_cast<std::size_t>(i)] << ',' << ro.log_prob[i];
    for (Eigen::Index k = 0; k < ro.u.rows(); ++k) out << ',' << ro.u(k, i);
    for (Eigen::Index k = 0; k < ro.obs.rows(); ++k) out << ',' << ro.obs(k, i);
    out << "\n";
  }
}

// Per-run bookkeeping shared by both learners.
class RunLog {
 public:
  RunLog(const RunConfig& c, const SceneConfig& scene, const ProgressFn& progress)
      : config_(c), scene_(scene), progress_(progress), episode_(env::default_episode_config(scene)) {
    const auto& last = c.curriculum.back();
    hold_ = {last.sigma_p, last.sigma_v};
    if (!c.out_dir.empty()) {
      std::filesystem::create_directories(c.out_dir / "checkpoints");
      std::ofstream(c.out_dir / "manifest.json") << manifest(c).dump(2) << "\n";
      metrics_.open(c.out_dir / "metrics.csv");
      if (!metrics_) throw ConfigError("cannot write metrics.csv under " + c.out_dir.string());
      write_metrics_header(metrics_);
    }
  }

  void record(long long step, const agents::PolicyCheckpoint& ckpt, TrainResult& result) {
    const auto params = env::apply_curriculum(config_.curriculum, step);
    MetricsRow row{step, params.sigma_p, params.sigma_v,
                   evaluate_actor(ckpt.actor(), scene_, episode_, config_.eval_episodes,
                                  mix_seed(config_.seed, 0xE7A1ull), hold_)};
    result.metrics.push_back(row);
    if (metrics_.is_open()) {
      write_metrics_row(metrics_, row);
      metrics_.flush();
      agents::save_checkpoint(config_.out_dir / "checkpoints" / ("step_" + std::to_string(step) + ".json"), ckpt);
    }
    if (progress_) progress_(row);
  }

  void finish(const agents::PolicyCheckpoint& ckpt) {
    if (!config_.out_dir.empty()) agents::save_checkpoint(config_.out_dir / "final.json", ckpt);
  }

  const env::EpisodeConfig& episode() const { return episode_; }

 private:
  const RunConfig& config_;
  const SceneConfig& scene_;
  const ProgressFn& progress_;
  env::EpisodeConfig episode_;
  HoldCriteria hold_;
  std::ofstream metrics_;
};

TrainResult train_ppo(const RunConfig& c, const SceneConfig& scene, RunLog& log) {
  env::MaglevEnv e(scene, log.episode(), env::apply_curriculum(c.curriculum, 0));
  agents::PpoAgent agent(e.observation_dim(), e.action_dim(), c.ppo, mix_seed(c.seed, 1));
  std::mt19937_64 rng(mix_seed(c.seed, 2));
  TrainResult result;
  log.record(0, agents::make_checkpoint(agent, c.scenario, 0, c.seed), result);

  std::uint64_t episode_index = 0;
  e.reset(mix_seed(c.seed, 1000 + episode_index++));
  long long step = 0;
  long long next_eval = c.eval_interval;
  const int obs_dim = e.observation_dim();
  const int act_dim = e.action_dim();
  while (step < c.total_steps) {
    const int len = static_cast<int>(std::min<long long>(c.ppo.rollout, c.total_steps - step));
    agents::PpoRollout ro;
    ro.obs.resize(obs_dim, len);
    ro.u.resize(act_dim, len);
    ro.log_prob.resize(len);
    for (int t = 0; t < len; ++t) {
      e.set_reward_params(env::apply_curriculum(c.curriculum, step));
      const Eigen::VectorXd obs = e.observation().flat();
      const auto sample = agent.actor.act_stochastic(obs, rng);
      ro.obs.col(t) = obs;
      ro.u.col(t) = sample.u;
      ro.log_prob[t] = sample.gaussian_log_prob;
      ro.values.push_back(agent.value(obs));
      const auto out = e.step(std::span<const double>(sample.action.data(), static_cast<std::size_t>(act_dim)));
      double r = out.reward;
      if (out.truncated) r += c.ppo.gamma * agent.value(out.observation.flat());
      ro.rewards.push_back(r);
      ro.terminals.push_back(out.terminated || out.truncated);
      ++step;
      if (e.done()) e.reset(mix_seed(c.seed, 1000 + episode_index++));
    }
    ro.values.push_back(agent.value(e.observation().flat()));
    if (c.ppo.anneal_lr) {
      const double frac = 1.0 - static_cast<double>(step - len) / static_cast<double>(c.total_steps);
      agent.actor_opt.lr = agent.log_std_opt.lr = frac * c.ppo.actor_lr;
      agent.critic_opt.lr = frac * c.ppo.critic_lr;
    }
    try {
      agent.update(ro, rng);
    } catch (const DomainError&) {
      if (!c.out_dir.empty()) dump_rollout(c.out_dir / "diagnostic_batch.csv", ro);
      throw;
    }
    if (!agent.actor.net.params().allFinite() || !agent.critic.params().allFinite()) {
      if (!c.out_dir.empty()) dump_rollout(c.out_dir / "diagnostic_batch.csv", ro);
      throw DomainError("non-finite parameters after ppo update");
    }
    if (step >= next_eval || step >= c.total_steps) {
      log.record(step, agents::make_checkpoint(agent, c.scenario, step, c.seed), result);
      while (next_eval <= step) next_eval += c.eval_interval;
    }
  }
  result.checkpoint = agents::make_checkpoint(agent, c.scenario, step, c.seed);
  log.finish(result.checkpoint);
  return result;
}

TrainResult train_sac(const RunConfig& c, const SceneConfig& scene, RunLog& log) {
  env::MaglevEnv e(scene, log.episode(), env::apply_curriculum(c.curriculum, 0));
  agents::SacAgent agent(e.observation_dim(), e.action_dim(), c.sac, mix_seed(c.seed, 1));
  std::mt19937_64 rng(mix_seed(c.seed, 2));
  agents::ReplayBuffer buffer(static_cast<std::size_t>(std::min<long long>(c.sac.replay_capacity, c.total_steps)),
                              e.observation_dim(), e.action_dim());
  TrainResult result;
  log.record(0, agents::make_checkpoint(agent, c.scenario, 0, c.seed), result);

  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::uint64_t episode_index = 0;
  e.reset(mix_seed(c.seed, 1000 + episode_index++));
  long long next_eval = c.eval_interval;
  for (long long step = 0; step < c.total_steps;) {
    e.set_reward_params(env::apply_curriculum(c.curriculum, step));
    agents::Transition tr;
    tr.obs = e.observation().flat();
    if (step < c.sac_warmup) {
      tr.action.resize(e.action_dim());
      for (int k = 0; k < e.action_dim(); ++k) tr.action[k] = uniform(rng);
    } else {
      tr.action = agent.actor.act_stochastic(tr.obs, rng).action;
    }
    const auto out = e.step(std::span<const double>(tr.action.data(), static_cast<std::size_t>(tr.action.size())));
    tr.reward = out.reward;
    tr.next_obs = out.observation.flat();
    tr.terminated = out.terminated;
    buffer.add(tr);
    ++step;
    if (e.done()) e.reset(mix_seed(c.seed, 1000 + episode_index++));
    if (step >= c.sac_warmup && buffer.size() >= static_cast<std::size_t>(c.sac.batch)) agent.update(buffer, rng);
    if (step >= next_eval || step >= c.total_steps) {
      log.record(step, agents::make_checkpoint(agent, c.scenario, step, c.seed), result);
      while (next_eval <= step) next_eval += c.eval_interval;
    }
  }
  result.checkpoint = agents::make_checkpoint(agent, c.scenario, c.total_steps, c.seed);
  log.finish(result.checkpoint);
  return result;
}

}  // namespace

TrainResult train(const RunConfig& config, const ProgressFn& progress) {
  config.validate();
  const SceneConfig scene = run_scene(config);
  RunLog log(config, scene, progress);
  return config.algorithm == "ppo" ? train_ppo(config, scene, log) : train_sac(config, scene, log);
}

}  // namespace pentabot::training
