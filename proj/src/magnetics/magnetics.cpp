#include "pentabot/magnetics.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "pentabot/errors.hpp"

namespace pentabot::magnetics {

namespace {

constexpr double kMinSeparation = 1e-6;

void check_probe(const SceneConfig& scene, const Vec3& probe) {
  if (!probe.allFinite()) throw DomainError("probe position is not finite");
  const double d = nearest_coil_distance(scene, probe);
  if (d < kCoilExclusionRadius) {
    throw DomainError("probe is " + std::to_string(d) + " m from a coil, inside the exclusion radius");
  }
}

// Field and Jacobian without validation; callers have checked inputs.
void accumulate(const SceneConfig& scene, std::span<const double> currents, const Vec3& probe, Vec3& field,
                Mat3* jacobian) {
  field.setZero();
  if (jacobian) jacobian->setZero();
  for (std::size_t i = 0; i < scene.coils.size(); ++i) {
    const CoilSpec& coil = scene.coils[i];
    const Vec3 m = coil.moment(currents[i]);
    field += dipole_field(m, coil.position, probe);
    if (jacobian) *jacobian += dipole_field_jacobian(m, coil.position, probe);
  }
}

}  // namespace

Vec3 dipole_field(const Vec3& moment, const Vec3& source, const Vec3& probe) {
  const Vec3 r = probe - source;
  const double rn = r.norm();
  if (!(rn > kMinSeparation)) throw DomainError("probe coincides with dipole source");
  const Vec3 rhat = r / rn;
  return kMu0Over4Pi * (3.0 * moment.dot(rhat) * rhat - moment) / (rn * rn * rn);
}

Mat3 dipole_field_jacobian(const Vec3& moment, const Vec3& source, const Vec3& probe) {
  const Vec3 r = probe - source;
  const double rn = r.norm();
  if (!(rn > kMinSeparation)) throw DomainError("probe coincides with dipole source");
  const double r2 = rn * rn;
  const double mr = moment.dot(r);
  const double scale = 3.0 * kMu0Over4Pi / (r2 * r2 * rn);
  Mat3 j = r * moment.transpose() + moment * r.transpose();
  j.diagonal().array() += mr;
  j -= (5.0 * mr / r2) * (r * r.transpose());
  return scale * j;
}

double nearest_coil_distance(const SceneConfig& scene, const Vec3& probe) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : scene.coils) best = std::min(best, (probe - c.position).norm());
  return best;
}

void check_currents(const SceneConfig& scene, std::span<const double> currents) {
  if (currents.size() != scene.coils.size()) {
    throw RangeError("expected " + std::to_string(scene.coils.size()) + " currents, got " +
                     std::to_string(currents.size()));
  }
  for (std::size_t i = 0; i < currents.size(); ++i) {
    const auto& c = scene.coils[i];
    if (!(currents[i] >= c.current_min && currents[i] <= c.current_max)) {
      throw RangeError("current " + std::to_string(currents[i]) + " A for coil " + std::to_string(i) +
                       " outside [" + std::to_string(c.current_min) + ", " + std::to_string(c.current_max) + "]");
    }
  }
}

Vec3 total_field(const SceneConfig& scene, std::span<const double> currents, const Vec3& probe) {
  check_currents(scene, currents);
  check_probe(scene, probe);
  Vec3 b;
  accumulate(scene, currents, probe, b, nullptr);
  return b;
}

double actuator_energy(const SceneConfig& scene, std::span<const double> currents, const Vec3& probe) {
  return -scene.actuator.dipole_strength * total_field(scene, currents, probe).norm();
}

Vec3 actuator_force(const SceneConfig& scene, std::span<const double> currents, const Vec3& probe,
                    ForceMethod method, double h) {
  check_currents(scene, currents);
  check_probe(scene, probe);
  if (method == ForceMethod::kFiniteDifference) {
    if (!(h > 0.0)) throw DomainError("finite-difference step must be positive");
    // Fourth-order central stencil; the second-order one leaves ~1e-4
    // relative truncation error where partial field cancellation shortens
    // the length scale of |B|.
    Vec3 f;
    for (int a = 0; a < 3; ++a) {
      auto u = [&](double off) {
        Vec3 q = probe;
        q[a] += off;
        return actuator_energy(scene, currents, q);
      };
      f[a] = -(u(-2.0 * h) - 8.0 * u(-h) + 8.0 * u(h) - u(2.0 * h)) / (12.0 * h);
    }
    return f;
  }
  Vec3 b;
  Mat3 j;
  accumulate(scene, currents, probe, b, &j);
  const double bn = b.norm();
  if (bn == 0.0) return Vec3::Zero();
  return scene.actuator.dipole_strength * (j.transpose() * b) / bn;
}

std::vector<Vec3> coil_force_contributions(const SceneConfig& scene, std::span<const double> currents,
                                           const Vec3& probe) {
  check_currents(scene, currents);
  check_probe(scene, probe);
  std::vector<Vec3> out(scene.coils.size(), Vec3::Zero());
  Vec3 b;
  accumulate(scene, currents, probe, b, nullptr);
  const double bn = b.norm();
  if (bn == 0.0) return out;
  const Vec3 bhat = b / bn;
  for (std::size_t i = 0; i < scene.coils.size(); ++i) {
    const CoilSpec& coil = scene.coils[i];
    const Mat3 j = dipole_field_jacobian(coil.moment(currents[i]), coil.position, probe);
    out[i] = scene.actuator.dipole_strength * (j.transpose() * bhat);
  }
  return out;
}

FieldSample sample(const SceneConfig& scene, std::span<const double> currents, const Vec3& probe) {
  check_currents(scene, currents);
  check_probe(scene, probe);
  Vec3 b;
  Mat3 j;
  accumulate(scene, currents, probe, b, &j);
  const double bn = b.norm();
  FieldSample s;
  s.field = b;
  s.energy = -scene.actuator.dipole_strength * bn;
  s.force = bn == 0.0 ? Vec3::Zero() : Vec3(scene.actuator.dipole_strength * (j.transpose() * b) / bn);
  return s;
}

}  // namespace pentabot::magnetics
