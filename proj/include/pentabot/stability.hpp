#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pentabot/scene.hpp"

namespace pentabot::stability {

struct EquilibriumOptions {
  double force_tolerance = 1e-8;  // N
  int max_iterations = 200;
  double hessian_step = 1e-5;     // m, central differences of the analytic force
  double max_step = 0.01;         // m, Newton step length cap
};

/// Result of a force-balance search for the potential U + M g h.
struct EquilibriumReport {
  bool converged = false;
  Vec3 point = Vec3::Zero();
  double residual_force = 0.0;            // N
  Vec3 hessian_eigs = Vec3::Zero();       // ascending, J/m^2
  bool stable_static = false;             // all eigenvalues > 0
  int iterations = 0;
};

/// Total static force (magnetic + gravity) on the bare actuator.
Vec3 static_force(const SceneConfig& scene, std::span<const double> currents, const Vec3& p);

/// Hessian of U + M g h at p, by central differences of the analytic force.
Eigen::Matrix3d potential_hessian(const SceneConfig& scene, std::span<const double> currents, const Vec3& p,
                                  double h = 1e-5);

/// Damped Newton iteration on the total force. Non-convergence (iteration
/// limit, entering a coil's exclusion radius, leaving the analysis domain)
/// is reported with converged = false rather than thrown.
EquilibriumReport find_equilibrium(const SceneConfig& scene, std::span<const double> currents,
                                   const Vec3& initial_guess, const EquilibriumOptions& options = {});

/// Boolean occupancy grid over a box, with scan provenance.
struct RegionMap {
  int dims = 2;
  Box domain;
  double resolution = 0.0;
  int nx = 0, ny = 0, nz = 1;
  std::vector<std::uint8_t> cells;  // row-major: x fastest, then y, then z
  std::uint64_t scene_hash = 0;
  std::size_t current_vectors = 0;
  int steps_per_coil = 0;
  double tolerance = 0.0;  // N

  std::size_t index(int ix, int iy, int iz = 0) const {
    return (static_cast<std::size_t>(iz) * ny + iy) * nx + ix;
  }
  bool at(int ix, int iy, int iz = 0) const { return cells[index(ix, iy, iz)] != 0; }
  Vec3 cell_center(int ix, int iy, int iz = 0) const;
  std::size_t controllable_count() const;
  bool operator==(const RegionMap&) const = default;
};

/// Cartesian product of `steps` evenly spaced currents over each coil's range.
std::vector<std::vector<double>> make_current_grid(const SceneConfig& scene, int steps);

struct ScanOptions {
  double tolerance_fraction = 0.05;  // of M g
  unsigned threads = 0;              // 0 = hardware concurrency
  int steps_per_coil = 0;            // metadata only
};

/// Marks a cell controllable iff some current vector balances gravity at the
/// cell center to within tolerance_fraction * M g (unshaped physics).
RegionMap scan_controllable_region(const SceneConfig& scene, const std::vector<std::vector<double>>& current_grid,
                                   const Box& domain, double resolution, const ScanOptions& options = {});

/// Controllable cell count times cell area (2D) or volume (3D).
double region_area(const RegionMap& map);

/// Portable text grid: header lines then one line of 0/1 per row.
void write_region(std::ostream& out, const RegionMap& map);
RegionMap read_region(std::istream& in);
/// CSV of controllable cell centers.
void write_region_csv(std::ostream& out, const RegionMap& map);

}  // namespace pentabot::stability
