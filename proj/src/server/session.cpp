#include "pentabot/session.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include <json.hpp>

#include "pentabot/errors.hpp"
#include "pentabot/training.hpp"

namespace pentabot::server {

namespace {

env::EpisodeConfig live_episode(const SceneConfig& scene) {
  env::EpisodeConfig ep = env::default_episode_config(scene);
  ep.max_steps = std::numeric_limits<int>::max();
  ep.target_resample_interval = ep.max_steps;
  return ep;
}

}  // namespace

Session::Session(SessionConfig config)
    : config_(std::move(config)), env_(config_.scene, live_episode(config_.scene)), speed_(config_.speed) {
  if (!(speed_ > 0.0)) throw ConfigError("speed factor must be positive");
  if (config_.actor.obs_dim() != env_.observation_dim() || config_.actor.act_dim() != env_.action_dim()) {
    throw ConfigError("checkpoint dimensions do not match scenario " + config_.scene.name);
  }
  env_.set_resampling(false);
  hello_ = make_hello(config_.scene);
  restart();
}

void Session::restart() {
  env_.reset(training::mix_seed(config_.seed, static_cast<std::uint64_t>(resets_++)));
}

Ack Session::handle_text(const std::string& text) {
  try {
    return handle(parse_client_message(text));
  } catch (const ProtocolError& e) {
    Ack a{e.seq.value_or(-1), false, e.what()};
    log_.push_back({ticks_, text, a});
    return a;
  }
}

Ack Session::handle(const ClientMessage& msg) {
  Ack a = apply(msg);
  log_.push_back({ticks_, serialize(msg), a});
  return a;
}

Ack Session::apply(const ClientMessage& msg) {
  Ack ack{msg.seq, true, ""};
  auto fail = [&](std::string reason) {
    ack.ok = false;
    ack.reason = std::move(reason);
    return ack;
  };
  const auto& scene = config_.scene;
  if (const auto* c = std::get_if<SetTarget>(&msg.command)) {
    if (static_cast<int>(c->pos.size()) != scene.spatial_dims()) {
      return fail("pos must have " + std::to_string(scene.spatial_dims()) + " entries");
    }
    if (env_.set_target(from_wire(scene, c->pos))) ack.reason = "clamped";
  } else if (const auto* c = std::get_if<AttachLoad>(&msg.command)) {
    if (!(c->mass_g > 0.0)) return fail("mass_g must be positive");
    if (terminated()) return fail("terminated");
    try {
      const auto& s = env_.state();
      env_.set_state(sim::attach_load(scene, s, c->mass_g * 1e-3, s.position));
    } catch (const StateError& e) {
      return fail(e.what());
    }
  } else if (std::holds_alternative<DetachLoad>(msg.command)) {
    if (terminated()) return fail("terminated");
    try {
      env_.set_state(sim::detach_load(env_.state()));
    } catch (const StateError& e) {
      return fail(e.what());
    }
  } else if (std::holds_alternative<Pause>(msg.command)) {
    paused_ = true;
  } else if (std::holds_alternative<Resume>(msg.command)) {
    paused_ = false;
  } else if (std::holds_alternative<Reset>(msg.command)) {
    restart();
  } else if (const auto* c = std::get_if<SetSpeed>(&msg.command)) {
    if (!(c->factor > 0.0) || !std::isfinite(c->factor)) return fail("factor must be positive");
    speed_ = c->factor;
  }
  return ack;
}

void Session::tick() {
  if (paused_ || terminated()) return;
  const Eigen::VectorXd a = config_.actor.act_deterministic(env_.observation().flat());
  env_.step(std::span<const double>(a.data(), static_cast<std::size_t>(a.size())));
  ++ticks_;
}

StateSnapshot Session::snapshot() {
  const auto& scene = config_.scene;
  const auto& s = env_.state();
  StateSnapshot out;
  out.seq = ++seq_;
  out.t = s.time;
  out.pos = to_wire(scene, s.position);
  out.vel = to_wire(scene, s.velocity);
  out.target = to_wire(scene, env_.target());
  out.currents = env_.last_currents();
  out.load_g = s.load_mass * 1e3;
  out.err = (s.position - env_.target()).norm();
  return out;
}

void Session::write_log(std::ostream& out) const {
  for (const auto& e : log_) {
    nlohmann::ordered_json j;
    j["tick"] = e.tick;
    j["message"] = e.message;
    j["ack"] = nlohmann::ordered_json::parse(serialize(e.ack));
    out << j.dump() << "\n";
  }
  nlohmann::ordered_json end;
  end["scenario"] = config_.scene.name;
  end["checkpoint"] = config_.checkpoint_id;
  end["ticks"] = ticks_;
  end["sim_time"] = sim_time();
  end["last_seq"] = seq_;
  out << end.dump() << "\n";
  out.flush();
}

}  // namespace pentabot::server
