#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pentabot/scene.hpp"

namespace pentabot::sim {

/// Control period used throughout (10 ms) and its integration substeps.
inline constexpr double kControlPeriod = 0.01;
inline constexpr int kSubsteps = 10;

struct ActuatorState {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  double load_mass = 0.0;  // kg
  double time = 0.0;       // s
  bool terminated = false;

  double total_mass(const SceneConfig& scene) const { return scene.actuator.mass + load_mass; }
};

/// w = min(d^2, 1) for a normalized distance d >= 0.
double remap_weight(double normalized_distance);

/// One coil's force contribution at the actuator, scaled by the remap weight
/// of its distance to the actuator when remapping is enabled. Needs the whole
/// current vector because the soft dipole aligns with the total field.
Vec3 shaped_coil_force(const SceneConfig& scene, std::size_t coil, std::span<const double> currents,
                       const ActuatorState& state);

/// Sum of shaped_coil_force over all coils (magnetic part only).
Vec3 shaped_force(const SceneConfig& scene, std::span<const double> currents, const Vec3& position);

struct StepResult {
  ActuatorState state;
  bool currents_clamped = false;
};

/// Advances the actuator by dt with semi-implicit Euler over kSubsteps
/// substeps. Out-of-range currents are clamped and flagged. Leaving the
/// workspace (or entering a coil's exclusion radius) flags termination; the
/// position is not clamped. Stepping a terminated state returns it unchanged.
StepResult step(const SceneConfig& scene, const ActuatorState& state, std::span<const double> currents,
                double dt = kControlPeriod);

/// Attach a load when unloaded and within 2 actuator radii of `load_position`.
ActuatorState attach_load(const SceneConfig& scene, const ActuatorState& state, double mass,
                          const Vec3& load_position);
ActuatorState detach_load(const ActuatorState& state);

/// Radius within which a load can be picked up.
double pickup_radius(const SceneConfig& scene);

/// Presets: "2d-paper" and "3d-paper". Throws ConfigError for other names.
SceneConfig preset_scene(std::string_view name);

/// Multiplier applied on top of the minimal static-support current.
inline constexpr double kCurrentHeadroom = 4.0;

/// Minimal admissible current bound (max over coils) for which some current
/// vector from the scene's symmetric pattern family statically supports
/// `mass` at `point` under the scene's force model (shaping included when
/// enabled). Returns +inf when no pattern balances gravity there.
double min_support_current(const SceneConfig& scene, const Vec3& point, double mass);

/// Round up to `digits` significant figures.
double round_up_sig(double value, int digits);

/// Recomputes the calibrated current limit: min_support_current at the
/// workspace center for the bare actuator, rounded up to 3 significant
/// figures, times kCurrentHeadroom.
double calibrate_current_limit(const SceneConfig& scene);

/// Trajectory dump: time, position, velocity, currents, load_mass.
void write_trajectory_header(std::ostream& out, const SceneConfig& scene);
void write_trajectory_row(std::ostream& out, const SceneConfig& scene, const ActuatorState& state,
                          std::span<const double> currents);

}  // namespace pentabot::sim
