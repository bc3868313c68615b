#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "pentabot/errors.hpp"
#include "pentabot/simulator.hpp"

namespace pentabot::sim {

namespace {

// Frozen output of calibrate_current_limit() for each preset; the unit tests
// re-derive them.
constexpr double kCurrentMax2D = 9.68e7;
constexpr double kCurrentMax3D = 5.92e7;

double diagonal(const Box& box, int dims) {
  const Vec3 e = box.extent();
  return dims == 2 ? std::hypot(e.x(), e.y()) : e.norm();
}

SceneConfig make_2d() {
  SceneConfig s;
  s.name = "2d-paper";
  s.dims = Dimensionality::k2D;
  const double c = std::numbers::sqrt2 / 2.0;
  // Two coils 0.15 m apart, axes tilted 45 degrees from gravity toward the
  // midline, opposite polarity.
  CoilSpec left;
  left.position = Vec3(-0.075, 0.0, 0.0);
  left.axis = Vec3(c, -c, 0.0);
  left.polarity = 1;
  CoilSpec right;
  right.position = Vec3(0.075, 0.0, 0.0);
  right.axis = Vec3(-c, -c, 0.0);
  right.polarity = -1;
  for (CoilSpec* coil : {&left, &right}) {
    coil->current_min = 0.0;
    coil->current_max = kCurrentMax2D;
  }
  s.coils = {left, right};
  s.workspace = Box{Vec3(-0.07, -0.13, 0.0), Vec3(0.07, -0.01, 0.0)};
  s.analysis_domain = Box{Vec3(-0.15, -0.25, 0.0), Vec3(0.15, 0.05, 0.0)};
  s.gravity = Vec3(0.0, -kGravity, 0.0);
  s.remap.enabled = true;
  s.remap.reference_distance = diagonal(s.workspace, 2);
  return s;
}

SceneConfig make_3d() {
  SceneConfig s;
  s.name = "3d-paper";
  s.dims = Dimensionality::k3D;
  CoilSpec center;
  center.position = Vec3(0.0, 0.0, 0.0);
  center.axis = Vec3(0.0, 0.0, -1.0);
  center.polarity = -1;
  s.coils.push_back(center);
  // Four ring coils pointing down and inward at 60 degrees below horizontal.
  const double elevation = std::numbers::pi / 3.0;
  const double ring_radius = 0.075;
  for (int i = 0; i < 4; ++i) {
    const double phi = i * std::numbers::pi / 2.0;
    const Vec3 radial(std::cos(phi), std::sin(phi), 0.0);
    CoilSpec coil;
    coil.position = ring_radius * radial;
    coil.axis = (-std::cos(elevation) * radial + Vec3(0.0, 0.0, -std::sin(elevation))).normalized();
    coil.polarity = 1;
    s.coils.push_back(coil);
  }
  for (auto& coil : s.coils) {
    coil.current_min = 0.0;
    coil.current_max = kCurrentMax3D;
  }
  s.workspace = Box{Vec3(-0.05, -0.05, -0.12), Vec3(0.05, 0.05, -0.02)};
  s.analysis_domain = Box{Vec3(-0.15, -0.15, -0.25), Vec3(0.15, 0.15, 0.05)};
  s.gravity = Vec3(0.0, 0.0, -kGravity);
  s.remap.enabled = true;
  s.remap.reference_distance = diagonal(s.workspace, 3);
  return s;
}

// Horizontal residual of the balancing condition along two axes normal to up.
struct Horizontal {
  Vec3 e1, e2;
};

Horizontal horizontal_basis(const Vec3& up) {
  Vec3 seed = std::abs(up.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  Vec3 e1 = (seed - seed.dot(up) * up).normalized();
  return {e1, up.cross(e1)};
}

}  // namespace

SceneConfig preset_scene(std::string_view name) {
  if (name == "2d-paper") return make_2d();
  if (name == "3d-paper") return make_3d();
  throw ConfigError("unknown scene preset '" + std::string(name) + "'");
}

double min_support_current(const SceneConfig& scene, const Vec3& point, double mass) {
  // Pattern family: coil 0 at t, every other coil at 1 - t, unit peak current.
  // The shaped force is homogeneous of degree one in the currents, so the
  // required peak current for a balancing pattern is mass*g / F_up * max(t, 1-t).
  SceneConfig unit = scene;
  for (auto& c : unit.coils) {
    c.current_min = 0.0;
    c.current_max = 1.0;
  }
  const Vec3 up = scene.up();
  const Horizontal hb = horizontal_basis(up);
  const double weight = mass * scene.gravity.norm();
  const bool planar = scene.dims == Dimensionality::k2D;

  auto force_at = [&](double t) {
    std::vector<double> currents(unit.coils.size(), 1.0 - t);
    currents[0] = t;
    return shaped_force(unit, currents, point);
  };
  auto required = [&](double t, const Vec3& f) {
    const double lift = f.dot(up);
    if (!(lift > 0.0)) return std::numeric_limits<double>::infinity();
    return weight / lift * std::max(t, 1.0 - t);
  };
  auto balanced = [&](const Vec3& f) {
    const double h = std::hypot(f.dot(hb.e1), planar ? 0.0 : f.dot(hb.e2));
    return h <= 1e-6 * f.norm();
  };

  constexpr int kSamples = 2000;
  double best = std::numeric_limits<double>::infinity();
  std::vector<Vec3> forces(kSamples + 1);
  for (int i = 0; i <= kSamples; ++i) forces[i] = force_at(static_cast<double>(i) / kSamples);

  for (int i = 0; i <= kSamples; ++i) {
    const double t = static_cast<double>(i) / kSamples;
    if (balanced(forces[i])) best = std::min(best, required(t, forces[i]));
    if (i == kSamples) break;
    // Refine sign changes of the first horizontal component by bisection.
    double lo = t, hi = static_cast<double>(i + 1) / kSamples;
    double flo = forces[i].dot(hb.e1), fhi = forces[i + 1].dot(hb.e1);
    if ((flo < 0.0) == (fhi < 0.0)) continue;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double fm = force_at(mid).dot(hb.e1);
      if ((fm < 0.0) == (flo < 0.0)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
    }
    const double tm = 0.5 * (lo + hi);
    const Vec3 f = force_at(tm);
    if (balanced(f)) best = std::min(best, required(tm, f));
  }
  return best;
}

double round_up_sig(double value, int digits) {
  if (!(value > 0.0) || !std::isfinite(value)) return value;
  const double p = std::pow(10.0, std::floor(std::log10(value)) - (digits - 1));
  return std::ceil(value / p - 1e-9) * p;
}

double calibrate_current_limit(const SceneConfig& scene) {
  const double minimal = min_support_current(scene, scene.workspace.center(), scene.actuator.mass);
  if (!std::isfinite(minimal)) throw ConfigError("no static support at the workspace center");
  return round_up_sig(minimal, 3) * kCurrentHeadroom;
}

}  // namespace pentabot::sim
