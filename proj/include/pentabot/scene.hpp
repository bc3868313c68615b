#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace pentabot {

using Vec3 = Eigen::Vector3d;

/// Gravitational acceleration magnitude, m/s^2.
inline constexpr double kGravity = 9.81;

/// Probes closer than this to a coil center are rejected.
inline constexpr double kCoilExclusionRadius = 0.01;

enum class Dimensionality { k2D, k3D };

/// A coil modeled as a point dipole: moment = polarity * gamma * I * axis.
struct CoilSpec {
  Vec3 position = Vec3::Zero();
  Vec3 axis = Vec3::UnitZ();
  double coil_constant = 1.0;  // A*m^2 per A
  int polarity = 1;            // +1 or -1
  double current_min = 0.0;    // A
  double current_max = 1.0;    // A

  Vec3 moment(double current) const { return polarity * coil_constant * current * axis; }
};

/// The levitated soft dipole. The dipole strength k is carried as an
/// empirical coefficient so that U = -k |B|.
struct ActuatorSpec {
  double mass = 0.8e-3;             // kg
  double dipole_strength = 1.3e-7;  // k
  double radius = 0.003;            // m
};

struct Box {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  Vec3 center() const { return 0.5 * (min + max); }
  Vec3 extent() const { return max - min; }
  bool contains(const Vec3& p) const;
  Vec3 clamp(const Vec3& p) const;
  bool operator==(const Box& o) const { return min == o.min && max == o.max; }
};

/// Distance-dependent force shaping w = min((d_m / d_ref)^2, 1) per coil.
struct RemapConfig {
  bool enabled = true;
  double reference_distance = 0.1;  // m
};

struct SceneConfig {
  std::string name;
  Dimensionality dims = Dimensionality::k2D;
  std::vector<CoilSpec> coils;
  ActuatorSpec actuator;
  Box workspace;
  double drag = 0.039;  // kg/s
  Vec3 gravity = Vec3(0.0, -kGravity, 0.0);
  RemapConfig remap;
  // Square analysis domain used for controllable-region scans.
  Box analysis_domain;

  std::size_t coil_count() const { return coils.size(); }
  /// Unit vector opposing gravity.
  Vec3 up() const { return -gravity.normalized(); }
  /// Number of spatial axes the actuator moves along (2 or 3).
  int spatial_dims() const { return dims == Dimensionality::k2D ? 2 : 3; }
};

/// Throws ConfigError if any invariant of the scene or its parts is violated.
void validate(const SceneConfig& scene);

/// Stable 64-bit FNV-1a digest over a canonical text rendering of the scene.
std::uint64_t scene_hash(const SceneConfig& scene);

/// Project a 3-vector onto the scene's motion subspace (drops z in 2D).
Vec3 project_to_plane(const SceneConfig& scene, const Vec3& v);

}  // namespace pentabot
