#include "pentabot/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pentabot/errors.hpp"

namespace pentabot::config {

namespace {

using json = nlohmann::json;

// Walks one object, rejecting keys outside `allowed`.
class Section {
 public:
  Section(const json& j, std::string path, std::set<std::string> allowed) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError((path_.empty() ? "config" : path_) + ": expected an object");
    for (const auto& [key, _] : j_.items()) {
      if (!allowed.count(key)) throw ConfigError("unknown config key '" + where(key) + "'");
    }
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  const json& raw(const std::string& key) const { return j_.at(key); }
  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  template <typename T>
  void get(const std::string& key, T& out) const {
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where(key) + ": wrong value type");
    }
  }

 private:
  const json& j_;
  std::string path_;
};

void read_ppo(const Section& s, agents::PpoConfig& p) {
  s.get("clip", p.clip);
  s.get("gamma", p.gamma);
  s.get("lambda", p.lambda);
  s.get("epochs", p.epochs);
  s.get("minibatch", p.minibatch);
  s.get("rollout", p.rollout);
  s.get("actor_lr", p.actor_lr);
  s.get("critic_lr", p.critic_lr);
  s.get("entropy_coef", p.entropy_coef);
  s.get("max_grad_norm", p.max_grad_norm);
  s.get("target_kl", p.target_kl);
  s.get("init_log_std", p.init_log_std);
  s.get("anneal_lr", p.anneal_lr);
  s.get("hidden", p.hidden);
}

void read_sac(const Section& s, agents::SacConfig& c) {
  s.get("alpha", c.alpha);
  s.get("auto_alpha", c.auto_alpha);
  s.get("target_entropy", c.target_entropy);
  s.get("gamma", c.gamma);
  s.get("tau", c.tau);
  s.get("replay_capacity", c.replay_capacity);
  s.get("batch", c.batch);
  s.get("actor_lr", c.actor_lr);
  s.get("critic_lr", c.critic_lr);
  s.get("alpha_lr", c.alpha_lr);
  s.get("hidden", c.hidden);
}

}  // namespace

AppConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  AppConfig cfg;
  const Section top(root, "", {"scene", "run", "ppo", "sac", "curriculum", "region", "server"});
  auto& run = cfg.run;
  if (top.has("scene")) {
    const Section s(top.raw("scene"), "scene", {"preset", "remap", "drag"});
    s.get("preset", run.scenario);
    s.get("remap", run.remap);
    if (s.has("drag")) {
      double d = 0.0;
      s.get("drag", d);
      run.drag = d;
    }
  }
  if (top.has("run")) {
    const Section s(top.raw("run"), "run",
                    {"algorithm", "total_steps", "seed", "eval_interval", "eval_episodes", "sac_warmup", "out"});
    s.get("algorithm", run.algorithm);
    s.get("total_steps", run.total_steps);
    s.get("seed", run.seed);
    s.get("eval_interval", run.eval_interval);
    if (!s.has("eval_interval")) run.eval_interval = std::min(run.eval_interval, run.total_steps);
    s.get("eval_episodes", run.eval_episodes);
    s.get("sac_warmup", run.sac_warmup);
    std::string out;
    s.get("out", out);
    if (!out.empty()) run.out_dir = out;
  }
  if (top.has("ppo")) {
    read_ppo(Section(top.raw("ppo"), "ppo",
                     {"clip", "gamma", "lambda", "epochs", "minibatch", "rollout", "actor_lr", "critic_lr",
                      "entropy_coef", "max_grad_norm", "target_kl", "init_log_std", "anneal_lr", "hidden"}),
             run.ppo);
  }
  if (top.has("sac")) {
    read_sac(Section(top.raw("sac"), "sac",
                     {"alpha", "auto_alpha", "target_entropy", "gamma", "tau", "replay_capacity", "batch", "actor_lr",
                      "critic_lr", "alpha_lr", "hidden"}),
             run.sac);
  }
  if (top.has("curriculum")) {
    const json& arr = top.raw("curriculum");
    if (!arr.is_array()) throw ConfigError("curriculum: expected an array of phases");
    env::CurriculumSchedule sched;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const Section s(arr[i], "curriculum[" + std::to_string(i) + "]", {"steps", "sigma_p", "sigma_v"});
      if (!s.has("steps") || !s.has("sigma_p") || !s.has("sigma_v")) {
        throw ConfigError("curriculum[" + std::to_string(i) + "]: steps, sigma_p and sigma_v are required");
      }
      env::CurriculumPhase p;
      s.get("steps", p.steps);
      s.get("sigma_p", p.sigma_p);
      s.get("sigma_v", p.sigma_v);
      sched.push_back(p);
    }
    run.curriculum = sched;
    cfg.curriculum_explicit = true;
  }
  if (top.has("region")) {
    const Section s(top.raw("region"), "region", {"resolution", "current_steps", "tolerance_fraction"});
    s.get("resolution", cfg.region.resolution);
    s.get("current_steps", cfg.region.current_steps);
    cfg.region_steps_explicit = s.has("current_steps");
    s.get("tolerance_fraction", cfg.region.tolerance_fraction);
  }
  if (top.has("server")) {
    const Section s(top.raw("server"), "server", {"address", "port", "speed", "seed"});
    s.get("address", cfg.server.address);
    s.get("port", cfg.server.port);
    s.get("speed", cfg.server.speed);
    s.get("seed", cfg.server.seed);
  }
  validate(cfg);
  return cfg;
}

AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::optional<std::filesystem::path> default_config_path() {
  const char* v = std::getenv("PENTABOT_CONFIG");
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::filesystem::path(v);
}

void validate(const AppConfig& c) {
  if (c.run.scenario != "2d-paper" && c.run.scenario != "3d-paper") {
    throw ConfigError("unknown scenario '" + c.run.scenario + "'");
  }
  if (c.run.drag && !(*c.run.drag >= 0.0)) throw ConfigError("scene.drag must be non-negative");
  c.run.validate();
  if (!(c.region.resolution > 0.0)) throw ConfigError("region.resolution must be positive");
  if (c.region.current_steps < 2) throw ConfigError("region.current_steps must be at least 2");
  if (!(c.region.tolerance_fraction > 0.0)) throw ConfigError("region.tolerance_fraction must be positive");
  if (c.server.port < 0 || c.server.port > 65535) throw ConfigError("server.port must be in [0, 65535]");
  if (!(c.server.speed > 0.0)) throw ConfigError("server.speed must be positive");
}

}  // namespace pentabot::config
