#pragma once

#include <cmath>
#include <random>

#include "pentabot/scene.hpp"

namespace pentabot::test {

inline double rel_err(double a, double b, double floor = 1e-30) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline double rel_err(const Vec3& a, const Vec3& b, double floor = 1e-30) {
  return (a - b).norm() / std::max({a.norm(), b.norm(), floor});
}

inline Vec3 random_in(const Box& box, std::mt19937_64& rng, int dims) {
  Vec3 p = Vec3::Zero();
  for (int a = 0; a < dims; ++a) p[a] = std::uniform_real_distribution<double>(box.min[a], box.max[a])(rng);
  return p;
}

}  // namespace pentabot::test

#include <vector>

#include "pentabot/stability.hpp"

namespace pentabot::test {

/// Random 3D static scene: 1-4 coils above the origin with random axes and
/// polarities, plus a random admissible current vector.
struct RandomStatic {
  SceneConfig scene;
  std::vector<double> currents;
  Vec3 guess;
};

inline RandomStatic random_static_scene(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  RandomStatic r;
  auto& s = r.scene;
  s.name = "random";
  s.dims = Dimensionality::k3D;
  s.gravity = Vec3(0, 0, -kGravity);
  s.workspace = Box{Vec3(-0.3, -0.3, -0.4), Vec3(0.3, 0.3, 0.2)};
  s.analysis_domain = s.workspace;
  const int n = 1 + static_cast<int>(u01(rng) * 4);
  for (int i = 0; i < n; ++i) {
    CoilSpec c;
    c.position = Vec3(0.08 * u(rng), 0.08 * u(rng), 0.05 + 0.05 * u01(rng));
    Vec3 axis(u(rng), u(rng), -1.0 - u01(rng));
    c.axis = axis.normalized();
    c.polarity = u01(rng) < 0.5 ? 1 : -1;
    c.current_max = 1e8;
    s.coils.push_back(c);
    r.currents.push_back((0.05 + 0.95 * u01(rng)) * c.current_max);
  }
  r.guess = Vec3(0.05 * u(rng), 0.05 * u(rng), -0.03 - 0.08 * u01(rng));
  return r;
}

}  // namespace pentabot::test
