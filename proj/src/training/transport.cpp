#include <cstdio>
#include <numeric>
#include <ostream>

#include "pentabot/errors.hpp"
#include "pentabot/simulator.hpp"
#include "pentabot/training.hpp"

namespace pentabot::training {

TransportScript default_transport_script(const SceneConfig& scene) {
  if (scene.dims != Dimensionality::k2D) throw ConfigError("the transport task is defined for 2D scenes");
  const Vec3 original(-0.04, -0.09, 0.0);
  const Vec3 lower(-0.015, -0.075, 0.0);
  const Vec3 upper(0.02, -0.045, 0.0);
  TransportScript s;
  s.start = original;
  s.load_mass = 1e-3;
  s.waypoints = {
      {lower, 300, WaypointKind::kPickup}, {upper, 300, WaypointKind::kDrop},  {original, 300, WaypointKind::kMove},
      {upper, 300, WaypointKind::kPickup}, {lower, 300, WaypointKind::kDrop},  {original, 300, WaypointKind::kMove},
  };
  return s;
}

namespace {

// Per-waypoint tracking totals; mirrors the hold metric of evaluate.
struct Tally {
  Vec3 abs_sum = Vec3::Zero();
  double err_sum = 0.0;
  double speed_sum = 0.0;
  long long samples = 0;
  int targets = 0;
  int held = 0;

  void add(const Vec3& e, double speed) {
    abs_sum += e.cwiseAbs();
    err_sum += e.norm();
    speed_sum += speed;
    ++samples;
  }
};

}  // namespace

TransportReport transport_eval(const agents::GaussianActor& actor, const SceneConfig& scene,
                               const TransportScript& script) {
  if (script.waypoints.empty()) throw ConfigError("transport script has no waypoints");
  if (scene.dims != Dimensionality::k2D) throw ConfigError("the transport task is defined for 2D scenes");
  for (const auto& w : script.waypoints) {
    if (w.steps <= 0) throw ConfigError("waypoint step budgets must be positive");
    if (!scene.workspace.contains(project_to_plane(scene, w.target))) throw ConfigError("waypoint outside workspace");
  }

  env::EpisodeConfig ep = env::default_episode_config(scene);
  ep.transport_mode = true;
  ep.load_mass = script.load_mass;
  ep.max_steps = std::accumulate(script.waypoints.begin(), script.waypoints.end(), 0,
                                 [](int acc, const Waypoint& w) { return acc + w.steps; });
  ep.target_resample_interval = ep.max_steps;
  const HoldCriteria hold;
  env::MaglevEnv e(scene, ep, {1.0, hold.sigma_p, hold.sigma_v});
  if (actor.obs_dim() != e.observation_dim() || actor.act_dim() != e.action_dim()) {
    throw ConfigError("policy dimensions do not match the scenario");
  }
  e.set_resampling(false);
  e.reset(0);
  sim::ActuatorState start;
  start.position = project_to_plane(scene, script.start);
  e.set_state(start);

  TransportReport rep;
  Tally tally;
  double reward_sum = 0.0;
  long long reward_steps = 0;
  Vec3 last_err = Vec3::Zero();

  auto log_event = [&](const char* kind) {
    rep.events.push_back({e.steps(), e.state().time, kind, e.state().position});
  };
  // Frozen-error fill for the steps a failure prevents from running.
  auto fill_rest = [&](std::size_t wi, int done_in_wp) {
    for (std::size_t k = wi; k < script.waypoints.size(); ++k) {
      const int from = k == wi ? done_in_wp : 0;
      for (int s = from + 1; s <= script.waypoints[k].steps; ++s) {
        if (s > kSettleSteps) tally.add(last_err, 0.0);
      }
      if (script.waypoints[k].steps >= kHoldSteps) ++tally.targets;
    }
  };

  for (std::size_t wi = 0; wi < script.waypoints.size() && rep.failure.empty(); ++wi) {
    const Waypoint& w = script.waypoints[wi];
    e.set_target(w.target);
    if (w.kind == WaypointKind::kPickup) {
      Vec3 drop = w.target;
      for (std::size_t k = wi + 1; k < script.waypoints.size(); ++k) {
        if (script.waypoints[k].kind == WaypointKind::kDrop) {
          drop = script.waypoints[k].target;
          break;
        }
      }
      e.set_load_task(project_to_plane(scene, w.target), project_to_plane(scene, drop));
    }
    bool attached = false, detached = false;
    int run = 0;
    bool held = false;
    int s = 0;
    for (; s < w.steps; ++s) {
      const Vec3 target = e.target();
      const Eigen::VectorXd a = actor.act_deterministic(e.observation().flat());
      const auto out = e.step(std::span<const double>(a.data(), static_cast<std::size_t>(a.size())));
      last_err = e.state().position - target;
      reward_sum += out.reward;
      ++reward_steps;
      if (out.info.attached) {
        attached = true;
        ++rep.attaches;
        log_event("attach");
      }
      if (out.info.detached) {
        detached = true;
        ++rep.detaches;
        log_event("detach");
      }
      if (out.terminated) {
        ++rep.tracking.workspace_exits;
        log_event("exit");
        rep.failure = "actuator left the workspace";
        break;
      }
      if (last_err.norm() <= hold.sigma_p && out.info.speed_mm_s < hold.sigma_v) {
        if (++run >= kHoldSteps) held = true;
      } else {
        run = 0;
      }
      if (s + 1 > kSettleSteps) tally.add(last_err, out.info.speed_mm_s);
    }
    if (!rep.failure.empty()) {
      fill_rest(wi, s + 1);
      break;
    }
    if (w.steps >= kHoldSteps) {
      ++tally.targets;
      if (held) ++tally.held;
    }
    if (w.kind == WaypointKind::kPickup && !attached) {
      log_event("timeout");
      rep.failure = "load never attached within the waypoint budget";
      fill_rest(wi + 1, 0);
    } else if (w.kind == WaypointKind::kDrop && !detached) {
      log_event("timeout");
      rep.failure = "load not released within the waypoint budget";
      fill_rest(wi + 1, 0);
    }
  }

  EvalReport& r = rep.tracking;
  r.episodes = 1;
  r.targets = tally.targets;
  r.success_rate = tally.targets ? static_cast<double>(tally.held) / tally.targets : 0.0;
  r.mean_reward = reward_steps ? reward_sum / reward_steps : 0.0;
  if (tally.samples > 0) {
    const Vec3 ext = scene.workspace.extent();
    for (int a = 0; a < scene.spatial_dims(); ++a) r.relative_error[a] = relative_error(tally.abs_sum[a] / tally.samples, ext[a]);
    r.max_relative_error = r.relative_error.head(scene.spatial_dims()).maxCoeff();
    r.mean_error_m = tally.err_sum / tally.samples;
    r.mean_speed_mm_s = tally.speed_sum / tally.samples;
  }
  rep.completed = rep.failure.empty();
  return rep;
}

TransportReport transport_eval(const agents::PolicyCheckpoint& checkpoint, const std::string& scenario,
                               const TransportScript& script, bool remap) {
  SceneConfig scene = sim::preset_scene(scenario);
  scene.remap.enabled = remap;
  return transport_eval(checkpoint.actor(), scene, script);
}

void write_transport_events(std::ostream& out, const TransportReport& report) {
  out << "step,time,event,x,y,z\n";
  char buf[160];
  for (const auto& ev : report.events) {
    std::snprintf(buf, sizeof buf, "%d,%.2f,%s,%.6f,%.6f,%.6f\n", ev.step, ev.time, ev.kind.c_str(), ev.position.x(),
                  ev.position.y(), ev.position.z());
    out << buf;
  }
}

}  // namespace pentabot::training
