#include "pentabot/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <vector>

#include "pentabot/errors.hpp"
#include "pentabot/magnetics.hpp"

namespace pentabot::sim {

double remap_weight(double normalized_distance) {
  if (!(normalized_distance >= 0.0)) throw DomainError("remap distance must be non-negative");
  return std::min(normalized_distance * normalized_distance, 1.0);
}

namespace {

double coil_weight(const SceneConfig& scene, std::size_t coil, const Vec3& position) {
  if (!scene.remap.enabled) return 1.0;
  const double d = (position - scene.coils[coil].position).norm();
  return remap_weight(d / scene.remap.reference_distance);
}

}  // namespace

Vec3 shaped_coil_force(const SceneConfig& scene, std::size_t coil, std::span<const double> currents,
                       const ActuatorState& state) {
  if (coil >= scene.coils.size()) throw RangeError("coil index out of range");
  const auto parts = magnetics::coil_force_contributions(scene, currents, state.position);
  return coil_weight(scene, coil, state.position) * parts[coil];
}

Vec3 shaped_force(const SceneConfig& scene, std::span<const double> currents, const Vec3& position) {
  const auto parts = magnetics::coil_force_contributions(scene, currents, position);
  Vec3 total = Vec3::Zero();
  for (std::size_t i = 0; i < parts.size(); ++i) total += coil_weight(scene, i, position) * parts[i];
  return total;
}

StepResult step(const SceneConfig& scene, const ActuatorState& state, std::span<const double> currents,
                double dt) {
  if (!(dt > 0.0)) throw DomainError("time step must be positive");
  if (currents.size() != scene.coils.size()) throw RangeError("current vector has the wrong length");

  StepResult result;
  result.state = state;
  if (state.terminated) return result;

  std::vector<double> applied(currents.begin(), currents.end());
  for (std::size_t i = 0; i < applied.size(); ++i) {
    const auto& c = scene.coils[i];
    const double clamped = std::clamp(applied[i], c.current_min, c.current_max);
    if (clamped != applied[i] || std::isnan(applied[i])) {
      result.currents_clamped = true;
      applied[i] = std::isnan(applied[i]) ? c.current_min : clamped;
    }
  }

  ActuatorState& s = result.state;
  const double mass = s.total_mass(scene);
  const double h = dt / kSubsteps;
  for (int k = 0; k < kSubsteps; ++k) {
    const Vec3 force = shaped_force(scene, applied, s.position) + mass * scene.gravity - scene.drag * s.velocity;
    s.velocity = project_to_plane(scene, s.velocity + (h / mass) * force);
    s.position = project_to_plane(scene, s.position + h * s.velocity);
    s.time += h;
    if (!scene.workspace.contains(s.position) ||
        magnetics::nearest_coil_distance(scene, s.position) < kCoilExclusionRadius) {
      s.terminated = true;
      break;
    }
  }
  return result;
}

double pickup_radius(const SceneConfig& scene) { return 2.0 * scene.actuator.radius; }

ActuatorState attach_load(const SceneConfig& scene, const ActuatorState& state, double mass,
                          const Vec3& load_position) {
  if (state.load_mass > 0.0) throw StateError("already-loaded");
  if (!(mass > 0.0)) throw DomainError("load mass must be positive");
  const double d = (project_to_plane(scene, state.position) - project_to_plane(scene, load_position)).norm();
  if (d > pickup_radius(scene)) throw StateError("load outside pickup radius");
  ActuatorState out = state;
  out.load_mass = mass;
  return out;
}

ActuatorState detach_load(const ActuatorState& state) {
  if (!(state.load_mass > 0.0)) throw StateError("not-loaded");
  ActuatorState out = state;
  out.load_mass = 0.0;
  return out;
}

void write_trajectory_header(std::ostream& out, const SceneConfig& scene) {
  const char* axes[] = {"x", "y", "z"};
  out << "time";
  for (int a = 0; a < scene.spatial_dims(); ++a) out << ",pos_" << axes[a];
  for (int a = 0; a < scene.spatial_dims(); ++a) out << ",vel_" << axes[a];
  for (std::size_t i = 0; i < scene.coils.size(); ++i) out << ",current_" << i;
  out << ",load_mass\n";
}

void write_trajectory_row(std::ostream& out, const SceneConfig& scene, const ActuatorState& state,
                          std::span<const double> currents) {
  char buf[40];
  auto put = [&](double v, bool comma) {
    std::snprintf(buf, sizeof buf, comma ? ",%.17g" : "%.17g", v);
    out << buf;
  };
  put(state.time, false);
  for (int a = 0; a < scene.spatial_dims(); ++a) put(state.position[a], true);
  for (int a = 0; a < scene.spatial_dims(); ++a) put(state.velocity[a], true);
  for (double c : currents) put(c, true);
  put(state.load_mass, true);
  out << '\n';
}

}  // namespace pentabot::sim
