#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "pentabot/scene.hpp"
#include "pentabot/simulator.hpp"

namespace pentabot::env {

inline constexpr int kFrameCount = 3;
/// Velocity feature = velocity in mm/s times this scale, clipped to +-1.5.
inline constexpr double kVelocityScale = 1.0 / 100.0;
inline constexpr double kFeatureClip = 1.5;

struct RewardParams {
  double alpha = 1.0;
  double sigma_p = 0.15;  // m
  double sigma_v = 50.0;  // mm/s
};

/// r = alpha * exp(-e_p^2 / (2 sigma_p^2) - v^2 / (2 sigma_v^2)), with e_p in
/// metres and v in mm/s.
double reward_fn(double position_error, double speed_mm_s, const RewardParams& params);

struct CurriculumPhase {
  long long steps = 0;
  double sigma_p = 0.0;
  double sigma_v = 0.0;
};
using CurriculumSchedule = std::vector<CurriculumPhase>;

/// Three phases of 5e6 steps each; `phase_steps` overrides the phase length.
CurriculumSchedule paper_curriculum(long long phase_steps = 5'000'000);

/// Reward parameters of the phase containing `global_step`; the last phase
/// persists past the end of the schedule.
RewardParams apply_curriculum(const CurriculumSchedule& schedule, long long global_step, double alpha = 1.0);

void validate(const CurriculumSchedule& schedule);

struct EpisodeConfig {
  int max_steps = 500;
  int target_resample_interval = 150;
  Box spawn_region;
  Box target_region;
  bool transport_mode = false;
  double load_mass = 1e-3;            // kg
  Vec3 load_position = Vec3::Zero();  // transport mode only
  Vec3 drop_position = Vec3::Zero();  // transport mode only
};

/// Spawn and target regions for a preset scene name.
EpisodeConfig default_episode_config(const SceneConfig& scene);

/// Force residual allowed by region_supported, as a fraction of the weight.
inline constexpr double kSupportTolerance = 0.05;

/// True when some admissible current vector balances the weight of `mass`
/// at the center and every corner of `region` (unshaped physics), the same
/// criterion the controllable-region scan applies per cell.
bool region_supported(const SceneConfig& scene, const Box& region, double mass);

/// Three stacked frames; each frame holds normalized position, scaled
/// velocity, normalized target and the previous action mapped to [-1, 1].
struct Observation {
  std::array<Eigen::VectorXd, kFrameCount> frames;  // oldest first

  Eigen::VectorXd flat() const;
  bool operator==(const Observation& other) const;
};

struct StepInfo {
  bool action_clamped = false;
  bool currents_clamped = false;
  bool target_resampled = false;
  bool attached = false;
  bool detached = false;
  double position_error = 0.0;  // m
  double speed_mm_s = 0.0;
  std::vector<double> currents;
};

struct StepOutcome {
  Observation observation;
  double reward = 0.0;
  bool terminated = false;
  bool truncated = false;
  StepInfo info;
};

class MaglevEnv {
 public:
  MaglevEnv(SceneConfig scene, EpisodeConfig episode, RewardParams reward = {});

  Observation reset(std::uint64_t seed);
  /// Action: one command per coil in [0, 1], mapped affinely onto each
  /// coil's current range. Throws StateError after the episode has ended.
  StepOutcome step(std::span<const double> action);

  void set_reward_params(const RewardParams& params) { reward_ = params; }
  const RewardParams& reward_params() const { return reward_; }

  /// Overrides the current target (clamped to the workspace). Returns true if
  /// clamping changed it.
  bool set_target(const Vec3& target);
  void set_load_task(const Vec3& load_position, const Vec3& drop_position);
  bool load_delivered() const { return delivered_; }

  /// Replaces the actuator state (used by scripted tasks and the server).
  void set_state(const sim::ActuatorState& state);
  /// Disables periodic target resampling (scripted targets).
  void set_resampling(bool enabled) { resampling_ = enabled; }

  const SceneConfig& scene() const { return scene_; }
  const EpisodeConfig& episode() const { return episode_; }
  const sim::ActuatorState& state() const { return state_; }
  const Vec3& target() const { return target_; }
  const Observation& observation() const { return obs_; }
  const std::vector<double>& last_currents() const { return currents_; }
  int steps() const { return steps_; }
  bool done() const { return done_; }

  int action_dim() const { return static_cast<int>(scene_.coils.size()); }
  int frame_dim() const { return 3 * scene_.spatial_dims() + action_dim(); }
  int observation_dim() const { return kFrameCount * frame_dim(); }

  Vec3 normalize_position(const Vec3& p) const;
  Vec3 denormalize_position(const Vec3& n) const;

 private:
  Eigen::VectorXd make_frame() const;
  void refresh_frames();
  Vec3 sample_in(const Box& box);

  SceneConfig scene_;
  EpisodeConfig episode_;
  RewardParams reward_;
  std::mt19937_64 rng_;
  sim::ActuatorState state_;
  Vec3 target_ = Vec3::Zero();
  std::vector<double> prev_action_;
  std::vector<double> currents_;
  Observation obs_;
  int steps_ = 0;
  bool done_ = true;
  bool resampling_ = true;
  bool delivered_ = false;
  bool spawn_checked_ = false;
};

}  // namespace pentabot::env
