#include "pentabot/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pentabot/errors.hpp"
#include "pentabot/ppo.hpp"
#include "pentabot/sac.hpp"

namespace pentabot::agents {

using Json = nlohmann::ordered_json;

const NetworkRecord& PolicyCheckpoint::network(const std::string& name) const {
  for (const auto& n : networks) {
    if (n.name == name) return n;
  }
  throw ConfigError("checkpoint has no network '" + name + "'");
}

GaussianActor PolicyCheckpoint::actor() const {
  const auto& rec = network("actor");
  const StdMode mode = algorithm == "ppo" ? StdMode::kStateIndependent : StdMode::kStateDependent;
  GaussianActor a(obs_dim, act_dim, rec.spec.hidden, rec.spec.hidden_activation, mode);
  if (a.net.spec() != rec.spec) throw ConfigError("checkpoint actor shape does not match its dimensions");
  a.net.set_params(rec.params);
  if (mode == StdMode::kStateIndependent) {
    if (raw_log_std.size() != act_dim) throw ConfigError("checkpoint log_std has the wrong size");
    a.raw_log_std = raw_log_std;
  }
  return a;
}

namespace {

NetworkRecord record(const std::string& name, const Mlp& net) { return {name, net.spec(), net.params()}; }

}  // namespace

PolicyCheckpoint make_checkpoint(const PpoAgent& agent, const std::string& scenario, long long global_step,
                                 std::uint64_t seed) {
  PolicyCheckpoint c;
  c.algorithm = "ppo";
  c.scenario = scenario;
  c.obs_dim = agent.actor.obs_dim();
  c.act_dim = agent.actor.act_dim();
  c.global_step = global_step;
  c.seed = seed;
  c.networks = {record("actor", agent.actor.net), record("critic", agent.critic)};
  c.raw_log_std = agent.actor.raw_log_std;
  return c;
}

PolicyCheckpoint make_checkpoint(const SacAgent& agent, const std::string& scenario, long long global_step,
                                 std::uint64_t seed) {
  PolicyCheckpoint c;
  c.algorithm = "sac";
  c.scenario = scenario;
  c.obs_dim = agent.actor.obs_dim();
  c.act_dim = agent.actor.act_dim();
  c.global_step = global_step;
  c.seed = seed;
  c.networks = {record("actor", agent.actor.net), record("q1", agent.q1), record("q2", agent.q2)};
  return c;
}

std::string checkpoint_to_text(const PolicyCheckpoint& ckpt) {
  Json j;
  j["format_version"] = ckpt.format_version;
  j["algorithm"] = ckpt.algorithm;
  j["scenario"] = ckpt.scenario;
  j["obs_dim"] = ckpt.obs_dim;
  j["act_dim"] = ckpt.act_dim;
  j["global_step"] = ckpt.global_step;
  j["seed"] = ckpt.seed;
  Json nets = Json::array();
  for (const auto& n : ckpt.networks) {
    Json jn;
    jn["name"] = n.name;
    std::vector<int> layers{n.spec.input};
    layers.insert(layers.end(), n.spec.hidden.begin(), n.spec.hidden.end());
    layers.push_back(n.spec.output);
    jn["layers"] = layers;
    jn["activation"] = activation_name(n.spec.hidden_activation);
    jn["params"] = std::vector<double>(n.params.data(), n.params.data() + n.params.size());
    nets.push_back(std::move(jn));
  }
  j["networks"] = std::move(nets);
  if (ckpt.raw_log_std.size() > 0) {
    j["raw_log_std"] = std::vector<double>(ckpt.raw_log_std.data(), ckpt.raw_log_std.data() + ckpt.raw_log_std.size());
  }
  return j.dump(1) + "\n";
}

PolicyCheckpoint checkpoint_from_text(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    PolicyCheckpoint c;
    c.format_version = j.at("format_version").get<int>();
    if (c.format_version != kCheckpointFormatVersion) {
      throw ConfigError("unsupported checkpoint format version " + std::to_string(c.format_version));
    }
    c.algorithm = j.at("algorithm").get<std::string>();
    if (c.algorithm != "ppo" && c.algorithm != "sac") throw ConfigError("unknown checkpoint algorithm");
    c.scenario = j.at("scenario").get<std::string>();
    c.obs_dim = j.at("obs_dim").get<int>();
    c.act_dim = j.at("act_dim").get<int>();
    c.global_step = j.at("global_step").get<long long>();
    c.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& jn : j.at("networks")) {
      NetworkRecord n;
      n.name = jn.at("name").get<std::string>();
      const auto layers = jn.at("layers").get<std::vector<int>>();
      if (layers.size() < 3) throw ConfigError("checkpoint network needs a hidden layer");
      n.spec.input = layers.front();
      n.spec.output = layers.back();
      n.spec.hidden.assign(layers.begin() + 1, layers.end() - 1);
      n.spec.hidden_activation = parse_activation(jn.at("activation").get<std::string>());
      const auto p = jn.at("params").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(p.size()) != Mlp(n.spec).param_count()) {
        throw ConfigError("checkpoint network '" + n.name + "' has the wrong parameter count");
      }
      n.params = Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size()));
      c.networks.push_back(std::move(n));
    }
    if (j.contains("raw_log_std")) {
      const auto v = j.at("raw_log_std").get<std::vector<double>>();
      c.raw_log_std = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
    c.actor();  // shape validation
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const PolicyCheckpoint& ckpt) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write checkpoint " + path.string());
  out << checkpoint_to_text(ckpt);
}

PolicyCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_text(ss.str());
}

}  // namespace pentabot::agents
