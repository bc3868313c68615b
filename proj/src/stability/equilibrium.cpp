#include <cmath>

#include <Eigen/Dense>

#include "pentabot/errors.hpp"
#include "pentabot/magnetics.hpp"
#include "pentabot/stability.hpp"

namespace pentabot::stability {

Vec3 static_force(const SceneConfig& scene, std::span<const double> currents, const Vec3& p) {
  return magnetics::actuator_force(scene, currents, p) + scene.actuator.mass * scene.gravity;
}

Eigen::Matrix3d potential_hessian(const SceneConfig& scene, std::span<const double> currents, const Vec3& p,
                                  double h) {
  // Gravity is linear in position, so only the magnetic force contributes.
  Eigen::Matrix3d hess;
  for (int b = 0; b < 3; ++b) {
    Vec3 lo = p, hi = p;
    lo[b] -= h;
    hi[b] += h;
    const Vec3 df = magnetics::actuator_force(scene, currents, hi) - magnetics::actuator_force(scene, currents, lo);
    hess.col(b) = -df / (2.0 * h);
  }
  return 0.5 * (hess + hess.transpose());
}

EquilibriumReport find_equilibrium(const SceneConfig& scene, std::span<const double> currents,
                                   const Vec3& initial_guess, const EquilibriumOptions& options) {
  magnetics::check_currents(scene, currents);
  EquilibriumReport report;
  Vec3 p = project_to_plane(scene, initial_guess);
  const bool planar = scene.dims == Dimensionality::k2D;
  const int n = planar ? 2 : 3;

  auto admissible = [&](const Vec3& q) {
    return q.allFinite() && magnetics::nearest_coil_distance(scene, q) >= kCoilExclusionRadius &&
           (scene.analysis_domain.extent().norm() == 0.0 || scene.analysis_domain.contains(q));
  };
  if (!admissible(p)) return report;

  Vec3 f = static_force(scene, currents, p);
  for (int it = 0; it < options.max_iterations; ++it) {
    if (f.norm() < options.force_tolerance) break;
    const Eigen::Matrix3d hess = potential_hessian(scene, currents, p, options.hessian_step);
    // Newton on F(p) = 0 with dF/dp = -H: step = H^-1 F.
    Eigen::VectorXd rhs = f.head(n);
    Eigen::MatrixXd jac = hess.topLeftCorner(n, n);
    Eigen::VectorXd delta = jac.colPivHouseholderQr().solve(rhs);
    if (!delta.allFinite() || jac.colPivHouseholderQr().rank() < n) {
      // Singular Hessian: gradient step on |F|^2 / 2, whose gradient is -H F.
      delta = jac * rhs;
      delta *= 1e-3 / std::max(delta.norm(), 1e-300);
    }
    if (delta.norm() > options.max_step) delta *= options.max_step / delta.norm();

    Vec3 step = Vec3::Zero();
    step.head(n) = delta;
    bool improved = false;
    for (int ls = 0; ls < 40; ++ls) {
      const Vec3 q = p + step;
      if (admissible(q)) {
        const Vec3 fq = static_force(scene, currents, q);
        if (fq.norm() < f.norm()) {
          p = q;
          f = fq;
          improved = true;
          ++report.iterations;
          break;
        }
      }
      step *= 0.5;
    }
    if (!improved) break;
  }

  report.point = p;
  report.residual_force = f.norm();
  report.converged = report.residual_force < options.force_tolerance;
  if (report.converged) {
    const Eigen::Matrix3d hess = potential_hessian(scene, currents, p, options.hessian_step);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(hess, Eigen::EigenvaluesOnly);
    report.hessian_eigs = eig.eigenvalues();
    report.stable_static = report.hessian_eigs.minCoeff() > 0.0;
  }
  return report;
}

}  // namespace pentabot::stability
