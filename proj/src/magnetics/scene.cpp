#include "pentabot/scene.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "pentabot/errors.hpp"

namespace pentabot {

bool Box::contains(const Vec3& p) const {
  return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
}

Vec3 Box::clamp(const Vec3& p) const { return p.cwiseMax(min).cwiseMin(max); }

namespace {

bool finite(const Vec3& v) { return v.allFinite(); }

void append(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g;", v);
  out += buf;
}

void append(std::string& out, const Vec3& v) {
  for (int i = 0; i < 3; ++i) append(out, v[i]);
}

}  // namespace

void validate(const SceneConfig& scene) {
  if (scene.coils.empty()) throw ConfigError("scene has no coils");
  for (std::size_t i = 0; i < scene.coils.size(); ++i) {
    const CoilSpec& c = scene.coils[i];
    const std::string tag = "coil " + std::to_string(i) + ": ";
    if (!finite(c.position) || !finite(c.axis)) throw ConfigError(tag + "non-finite geometry");
    if (std::abs(c.axis.norm() - 1.0) > 1e-9) throw ConfigError(tag + "axis is not a unit vector");
    if (!(c.coil_constant > 0.0)) throw ConfigError(tag + "coil constant must be positive");
    if (c.polarity != 1 && c.polarity != -1) throw ConfigError(tag + "polarity must be +1 or -1");
    if (!(c.current_min <= c.current_max)) throw ConfigError(tag + "current_min exceeds current_max");
  }
  if (!(scene.actuator.mass > 0.0)) throw ConfigError("actuator mass must be positive");
  if (!(scene.actuator.dipole_strength > 0.0)) throw ConfigError("actuator dipole strength must be positive");
  if (!(scene.actuator.radius > 0.0)) throw ConfigError("actuator radius must be positive");
  if (!(scene.drag >= 0.0)) throw ConfigError("drag coefficient must be non-negative");
  if (!finite(scene.gravity) || scene.gravity.norm() == 0.0) throw ConfigError("gravity must be finite and non-zero");
  if (!(scene.remap.reference_distance > 0.0)) throw ConfigError("remap reference distance must be positive");
  const Vec3 ext = scene.workspace.extent();
  const int dims = scene.spatial_dims();
  for (int a = 0; a < dims; ++a) {
    if (!(ext[a] > 0.0)) throw ConfigError("workspace is degenerate");
  }
  if (scene.dims == Dimensionality::k2D) {
    for (const auto& c : scene.coils) {
      if (c.position.z() != 0.0 || c.axis.z() != 0.0) {
        throw ConfigError("2D scenes need coils and axes in the x-y plane");
      }
    }
  }
}

std::uint64_t scene_hash(const SceneConfig& scene) {
  std::string text = scene.name + "|";
  text += scene.dims == Dimensionality::k2D ? "2d|" : "3d|";
  for (const auto& c : scene.coils) {
    append(text, c.position);
    append(text, c.axis);
    append(text, c.coil_constant);
    append(text, static_cast<double>(c.polarity));
    append(text, c.current_min);
    append(text, c.current_max);
  }
  append(text, scene.actuator.mass);
  append(text, scene.actuator.dipole_strength);
  append(text, scene.actuator.radius);
  append(text, scene.workspace.min);
  append(text, scene.workspace.max);
  append(text, scene.drag);
  append(text, scene.gravity);
  append(text, scene.remap.enabled ? 1.0 : 0.0);
  append(text, scene.remap.reference_distance);

  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

Vec3 project_to_plane(const SceneConfig& scene, const Vec3& v) {
  if (scene.dims == Dimensionality::k3D) return v;
  return Vec3(v.x(), v.y(), 0.0);
}

}  // namespace pentabot
