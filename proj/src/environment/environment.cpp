#include "pentabot/environment.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pentabot/errors.hpp"
#include "pentabot/magnetics.hpp"

namespace pentabot::env {

double reward_fn(double position_error, double speed_mm_s, const RewardParams& params) {
  const double ep = position_error / params.sigma_p;
  const double ev = speed_mm_s / params.sigma_v;
  return params.alpha * std::exp(-0.5 * ep * ep - 0.5 * ev * ev);
}

CurriculumSchedule paper_curriculum(long long phase_steps) {
  return {{phase_steps, 0.15, 50.0}, {phase_steps, 0.10, 30.0}, {phase_steps, 0.05, 10.0}};
}

void validate(const CurriculumSchedule& schedule) {
  if (schedule.empty()) throw ConfigError("curriculum schedule is empty");
  for (const auto& phase : schedule) {
    if (phase.steps <= 0) throw ConfigError("curriculum phase needs a positive step count");
    if (!(phase.sigma_p > 0.0) || !(phase.sigma_v > 0.0)) throw ConfigError("curriculum sigmas must be positive");
  }
}

RewardParams apply_curriculum(const CurriculumSchedule& schedule, long long global_step, double alpha) {
  validate(schedule);
  if (global_step < 0) throw DomainError("global step must be non-negative");
  long long end = 0;
  for (const auto& phase : schedule) {
    end += phase.steps;
    if (global_step < end) return {alpha, phase.sigma_p, phase.sigma_v};
  }
  return {alpha, schedule.back().sigma_p, schedule.back().sigma_v};
}

EpisodeConfig default_episode_config(const SceneConfig& scene) {
  EpisodeConfig cfg;
  if (scene.dims == Dimensionality::k2D) {
    cfg.target_region = Box{Vec3(-0.045, -0.10, 0.0), Vec3(0.045, -0.03, 0.0)};
    cfg.spawn_region = cfg.target_region;
    cfg.load_position = Vec3(-0.015, -0.075, 0.0);
    cfg.drop_position = Vec3(0.02, -0.045, 0.0);
  } else {
    cfg.target_region = Box{Vec3(-0.03, -0.03, -0.09), Vec3(0.03, 0.03, -0.05)};
    cfg.spawn_region = cfg.target_region;
    cfg.load_position = Vec3(0.0, 0.0, -0.08);
    cfg.drop_position = Vec3(0.0, 0.0, -0.05);
  }
  return cfg;
}

namespace {

// True when some admissible current vector balances the weight at p to within
// tolerance. The force is homogeneous of degree one in the currents, so the
// pattern is searched on a grid of the unit cube and the scale is solved in
// closed form.
bool point_supported(const SceneConfig& unit, const Vec3& p, const Vec3& weight, double limit, double tol,
                     int levels) {
  const std::size_t n = unit.coils.size();
  std::vector<int> idx(n, 0);
  std::vector<double> currents(n);
  while (true) {
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
      currents[i] = static_cast<double>(idx[i]) / (levels - 1);
      any = any || idx[i] > 0;
    }
    if (any) {
      const Vec3 f = magnetics::actuator_force(unit, currents, p);
      const double ff = f.squaredNorm();
      if (ff > 0.0) {
        const double scale = std::clamp(-f.dot(weight) / ff, 0.0, limit);
        if ((scale * f + weight).norm() < tol) return true;
      }
    }
    std::size_t k = 0;
    while (k < n && ++idx[k] == levels) idx[k++] = 0;
    if (k == n) return false;
  }
}

}  // namespace

bool region_supported(const SceneConfig& scene, const Box& region, double mass) {
  SceneConfig unit = scene;
  double limit = scene.coils.front().current_max;
  for (auto& c : unit.coils) {
    limit = std::min(limit, c.current_max);
    c.current_min = 0.0;
    c.current_max = 1.0;
  }
  const Vec3 weight = mass * scene.gravity;
  const double tol = kSupportTolerance * weight.norm();
  const bool planar = scene.dims == Dimensionality::k2D;
  const int levels = planar ? 201 : 17;
  std::vector<Vec3> probes{region.center()};
  const int corners = planar ? 4 : 8;
  for (int k = 0; k < corners; ++k) {
    Vec3 p;
    p.x() = (k & 1) ? region.max.x() : region.min.x();
    p.y() = (k & 2) ? region.max.y() : region.min.y();
    p.z() = planar ? 0.0 : ((k & 4) ? region.max.z() : region.min.z());
    probes.push_back(p);
  }
  for (const auto& p : probes) {
    if (!scene.workspace.contains(p)) return false;
    if (!point_supported(unit, p, weight, limit, tol, levels)) return false;
  }
  return true;
}

Eigen::VectorXd Observation::flat() const {
  const auto n = frames[0].size();
  Eigen::VectorXd out(n * kFrameCount);
  for (int f = 0; f < kFrameCount; ++f) out.segment(f * n, n) = frames[f];
  return out;
}

bool Observation::operator==(const Observation& other) const {
  for (int f = 0; f < kFrameCount; ++f) {
    if (frames[f].size() != other.frames[f].size() || frames[f] != other.frames[f]) return false;
  }
  return true;
}

MaglevEnv::MaglevEnv(SceneConfig scene, EpisodeConfig episode, RewardParams reward)
    : scene_(std::move(scene)), episode_(std::move(episode)), reward_(reward) {
  pentabot::validate(scene_);
  if (episode_.max_steps <= 0 || episode_.target_resample_interval <= 0) {
    throw ConfigError("episode lengths must be positive");
  }
  if (episode_.max_steps < episode_.target_resample_interval) {
    throw ConfigError("max_steps must be at least the target resample interval");
  }
  if (!scene_.workspace.contains(project_to_plane(scene_, episode_.spawn_region.min)) ||
      !scene_.workspace.contains(project_to_plane(scene_, episode_.spawn_region.max)) ||
      !scene_.workspace.contains(project_to_plane(scene_, episode_.target_region.min)) ||
      !scene_.workspace.contains(project_to_plane(scene_, episode_.target_region.max))) {
    throw ConfigError("spawn and target regions must lie inside the workspace");
  }
  prev_action_.assign(scene_.coils.size(), 0.0);
  currents_.assign(scene_.coils.size(), 0.0);
}

Vec3 MaglevEnv::normalize_position(const Vec3& p) const {
  const Vec3 c = scene_.workspace.center();
  const Vec3 half = 0.5 * scene_.workspace.extent();
  Vec3 n = Vec3::Zero();
  for (int a = 0; a < scene_.spatial_dims(); ++a) n[a] = (p[a] - c[a]) / half[a];
  return n;
}

Vec3 MaglevEnv::denormalize_position(const Vec3& n) const {
  const Vec3 c = scene_.workspace.center();
  const Vec3 half = 0.5 * scene_.workspace.extent();
  Vec3 p = c;
  for (int a = 0; a < scene_.spatial_dims(); ++a) p[a] = c[a] + n[a] * half[a];
  return project_to_plane(scene_, p);
}

Vec3 MaglevEnv::sample_in(const Box& box) {
  Vec3 p = Vec3::Zero();
  for (int a = 0; a < scene_.spatial_dims(); ++a) {
    std::uniform_real_distribution<double> u(box.min[a], box.max[a]);
    p[a] = u(rng_);
  }
  return p;
}

Eigen::VectorXd MaglevEnv::make_frame() const {
  const int d = scene_.spatial_dims();
  Eigen::VectorXd f(frame_dim());
  const Vec3 p = normalize_position(state_.position);
  const Vec3 t = normalize_position(target_);
  for (int a = 0; a < d; ++a) {
    f[a] = std::clamp(p[a], -kFeatureClip, kFeatureClip);
    f[d + a] = std::clamp(state_.velocity[a] * 1000.0 * kVelocityScale, -kFeatureClip, kFeatureClip);
    f[2 * d + a] = t[a];
  }
  for (std::size_t i = 0; i < prev_action_.size(); ++i) f[3 * d + static_cast<int>(i)] = 2.0 * prev_action_[i] - 1.0;
  return f;
}

Observation MaglevEnv::reset(std::uint64_t seed) {
  if (!spawn_checked_) {
    if (!region_supported(scene_, episode_.spawn_region, scene_.actuator.mass)) {
      throw ConfigError("spawn region is not inside the controllable region");
    }
    spawn_checked_ = true;
  }
  rng_.seed(seed);
  state_ = sim::ActuatorState{};
  state_.position = sample_in(episode_.spawn_region);
  target_ = sample_in(episode_.target_region);
  std::fill(prev_action_.begin(), prev_action_.end(), 0.0);
  std::fill(currents_.begin(), currents_.end(), 0.0);
  steps_ = 0;
  done_ = false;
  delivered_ = false;
  const Eigen::VectorXd frame = make_frame();
  for (auto& f : obs_.frames) f = frame;
  return obs_;
}

bool MaglevEnv::set_target(const Vec3& target) {
  const Vec3 clamped = project_to_plane(scene_, scene_.workspace.clamp(target));
  const bool changed = !(clamped == project_to_plane(scene_, target));
  target_ = clamped;
  refresh_frames();
  return changed;
}

void MaglevEnv::set_load_task(const Vec3& load_position, const Vec3& drop_position) {
  episode_.load_position = load_position;
  episode_.drop_position = drop_position;
  delivered_ = false;
}

void MaglevEnv::set_state(const sim::ActuatorState& state) {
  state_ = state;
  refresh_frames();
}

void MaglevEnv::refresh_frames() {
  if (done_) return;
  // Before the first step every frame is the bootstrap frame; afterwards only
  // the newest frame reflects the override.
  const Eigen::VectorXd frame = make_frame();
  if (steps_ == 0) {
    for (auto& f : obs_.frames) f = frame;
  } else {
    obs_.frames[kFrameCount - 1] = frame;
  }
}

StepOutcome MaglevEnv::step(std::span<const double> action) {
  if (done_) throw StateError("step called after the episode ended; call reset first");
  if (action.size() != prev_action_.size()) {
    throw RangeError("expected " + std::to_string(prev_action_.size()) + " action components");
  }
  StepOutcome out;
  for (std::size_t i = 0; i < action.size(); ++i) {
    double a = action[i];
    if (std::isnan(a)) a = 0.0;
    const double c = std::clamp(a, 0.0, 1.0);
    if (c != action[i]) out.info.action_clamped = true;
    prev_action_[i] = c;
    const auto& coil = scene_.coils[i];
    currents_[i] = coil.current_min + c * (coil.current_max - coil.current_min);
  }

  const auto result = sim::step(scene_, state_, currents_);
  state_ = result.state;
  out.info.currents_clamped = result.currents_clamped;
  out.info.currents = currents_;
  ++steps_;

  if (episode_.transport_mode && !state_.terminated) {
    const double r = sim::pickup_radius(scene_);
    if (state_.load_mass == 0.0 && !delivered_ && (state_.position - episode_.load_position).norm() <= r) {
      state_ = sim::attach_load(scene_, state_, episode_.load_mass, episode_.load_position);
      out.info.attached = true;
    } else if (state_.load_mass > 0.0 && (state_.position - episode_.drop_position).norm() <= r) {
      state_ = sim::detach_load(state_);
      delivered_ = true;
      out.info.detached = true;
    }
  }

  out.info.position_error = (state_.position - target_).norm();
  out.info.speed_mm_s = state_.velocity.norm() * 1000.0;
  out.reward = reward_fn(out.info.position_error, out.info.speed_mm_s, reward_);
  out.terminated = state_.terminated;
  out.truncated = !out.terminated && steps_ >= episode_.max_steps;
  done_ = out.terminated || out.truncated;

  if (!done_ && resampling_ && steps_ % episode_.target_resample_interval == 0) {
    target_ = sample_in(episode_.target_region);
    out.info.target_resampled = true;
  }

  for (int f = 0; f + 1 < kFrameCount; ++f) obs_.frames[f] = obs_.frames[f + 1];
  obs_.frames[kFrameCount - 1] = make_frame();
  out.observation = obs_;
  return out;
}

}  // namespace pentabot::env
