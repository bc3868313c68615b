#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "pentabot/scene.hpp"

namespace pentabot::magnetics {

using Mat3 = Eigen::Matrix3d;

/// mu0 / (4 pi) in T*m/A.
inline constexpr double kMu0Over4Pi = 1e-7;

/// Point-dipole field of `moment` located at `source`, evaluated at `probe`.
/// Throws DomainError when the probe is within 1e-6 m of the source.
Vec3 dipole_field(const Vec3& moment, const Vec3& source, const Vec3& probe);

/// Spatial Jacobian dB_a/dr_b of the point-dipole field. Symmetric since the
/// field is curl-free away from the source.
Mat3 dipole_field_jacobian(const Vec3& moment, const Vec3& source, const Vec3& probe);

/// Superposed field of all coils. Validates currents against each coil's
/// range (RangeError) and the probe against the exclusion radius
/// (DomainError).
Vec3 total_field(const SceneConfig& scene, std::span<const double> currents, const Vec3& probe);

/// U = -k |B|.
double actuator_energy(const SceneConfig& scene, std::span<const double> currents, const Vec3& probe);

enum class ForceMethod { kAnalytic, kFiniteDifference };

inline constexpr double kDefaultFdStep = 1e-4;

/// Magnetic force -grad U on the soft dipole; gravity is not included.
/// The analytic route is k * J^T B / |B|; the finite-difference route uses
/// fourth-order central differences of actuator_energy with step h.
Vec3 actuator_force(const SceneConfig& scene, std::span<const double> currents, const Vec3& probe,
                    ForceMethod method = ForceMethod::kAnalytic, double h = kDefaultFdStep);

/// Per-coil split of the analytic force: F_i = k J_i^T B_hat, where B_hat is
/// the direction of the total field. The contributions sum to actuator_force.
/// Returns all zeros where the total field vanishes.
std::vector<Vec3> coil_force_contributions(const SceneConfig& scene,
                                           std::span<const double> currents, const Vec3& probe);

struct FieldSample {
  Vec3 field;
  double energy;
  Vec3 force;
};

FieldSample sample(const SceneConfig& scene, std::span<const double> currents, const Vec3& probe);

/// Smallest distance from `probe` to any coil center.
double nearest_coil_distance(const SceneConfig& scene, const Vec3& probe);

/// Checks currents against coil ranges without evaluating anything.
void check_currents(const SceneConfig& scene, std::span<const double> currents);

}  // namespace pentabot::magnetics
