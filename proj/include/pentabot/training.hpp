#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pentabot/checkpoint.hpp"
#include "pentabot/environment.hpp"
#include "pentabot/policy.hpp"
#include "pentabot/ppo.hpp"
#include "pentabot/sac.hpp"
#include "pentabot/scene.hpp"

namespace pentabot::training {

struct RunConfig {
  std::string algorithm = "ppo";  // "ppo" | "sac"
  std::string scenario = "2d-paper";
  long long total_steps = 300'000;
  env::CurriculumSchedule curriculum = env::paper_curriculum(100'000);
  std::uint64_t seed = 1;
  long long eval_interval = 25'000;
  int eval_episodes = 5;
  std::filesystem::path out_dir;  // empty: nothing written
  bool remap = true;
  std::optional<double> drag;  // kg/s; preset value when unset
  agents::PpoConfig ppo;
  agents::SacConfig sac;
  int sac_warmup = 1000;  // uniform-random steps before the first update

  void validate() const;
};

/// Scene for a run: the preset with the run's remap flag and drag override applied.
SceneConfig run_scene(const RunConfig& config);

/// Hold-quality metrics. Errors are measured after the first second of each
/// target; a target counts as held when the actuator stays within the final
/// curriculum sigma_p of it with speed below the final sigma_v for 100
/// consecutive control steps.
struct EvalReport {
  Vec3 relative_error = Vec3::Zero();  // per axis: mean |error| / workspace extent
  double max_relative_error = 0.0;     // max over the scene's axes
  double mean_error_m = 0.0;
  double mean_speed_mm_s = 0.0;
  double mean_reward = 0.0;            // per step, final-phase reward parameters
  double success_rate = 0.0;
  int episodes = 0;
  int targets = 0;
  int workspace_exits = 0;

  bool operator==(const EvalReport&) const = default;
};

/// Mean absolute error over the controllable range along one axis.
double relative_error(double mean_abs_error_m, double range_m);

inline constexpr int kHoldSteps = 100;      // 1 s at the 10 ms control period
inline constexpr int kSettleSteps = 100;    // excluded after each target switch

struct HoldCriteria {
  double sigma_p = 0.05;
  double sigma_v = 10.0;
};

/// Deterministic-mode evaluation of an actor.
EvalReport evaluate_actor(const agents::GaussianActor& actor, const SceneConfig& scene,
                          const env::EpisodeConfig& episode, int n_episodes, std::uint64_t seed,
                          const HoldCriteria& hold = {});

/// Evaluates a checkpoint on a scenario preset. Throws ConfigError on a
/// dimension mismatch and DomainError for n_episodes <= 0.
EvalReport evaluate(const agents::PolicyCheckpoint& checkpoint, const std::string& scenario, int n_episodes,
                    std::uint64_t seed, bool remap = true);

struct MetricsRow {
  long long global_step = 0;
  double sigma_p = 0.0;
  double sigma_v = 0.0;
  EvalReport eval;
};

void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, const MetricsRow& row);

struct TrainResult {
  agents::PolicyCheckpoint checkpoint;
  std::vector<MetricsRow> metrics;
};

using ProgressFn = std::function<void(const MetricsRow&)>;

/// Runs PPO or SAC with curriculum-updated reward parameters. With an output
/// directory, writes metrics.csv, manifest.json and a checkpoint per
/// evaluation (checkpoints/step_<N>.json plus final.json).
TrainResult train(const RunConfig& config, const ProgressFn& progress = {});

/// splitmix64 finalizer, used to derive per-episode seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

// ---------------------------------------------------------------- transport

enum class WaypointKind { kMove, kPickup, kDrop };

struct Waypoint {
  Vec3 target = Vec3::Zero();
  int steps = 300;
  WaypointKind kind = WaypointKind::kMove;
};

/// Ordered waypoints. Pickup waypoints place the load at their target;
/// the next drop waypoint is where it is released.
struct TransportScript {
  std::vector<Waypoint> waypoints;
  double load_mass = 1e-3;  // kg
  Vec3 start = Vec3::Zero();
};

/// Two-stage route: original -> lower (pickup) -> upper (drop) -> original,
/// then original -> upper (pickup) -> lower (drop) -> original.
TransportScript default_transport_script(const SceneConfig& scene);

struct TransportEvent {
  int step = 0;
  double time = 0.0;
  std::string kind;  // attach | detach | exit | timeout
  Vec3 position = Vec3::Zero();
};

struct TransportReport {
  EvalReport tracking;  // relative_error over all post-settle steps
  std::vector<TransportEvent> events;
  int attaches = 0;
  int detaches = 0;
  bool completed = false;
  std::string failure;
};

TransportReport transport_eval(const agents::GaussianActor& actor, const SceneConfig& scene,
                               const TransportScript& script);
TransportReport transport_eval(const agents::PolicyCheckpoint& checkpoint, const std::string& scenario,
                               const TransportScript& script, bool remap = true);

void write_transport_events(std::ostream& out, const TransportReport& report);

}  // namespace pentabot::training
