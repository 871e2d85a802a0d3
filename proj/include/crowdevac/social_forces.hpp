#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "crowdevac/domain.hpp"
#include "crowdevac/field.hpp"

namespace crowdevac {

/// Exponential repulsion/attraction pair potential
/// U(r) = C_r exp(-r / sigma_r) - C_a exp(-r / sigma_a).
struct InteractionPotentialParams {
  double repulsion_strength = 0.02;
  double repulsion_range = 0.05;
  double attraction_strength = 0.01;
  double attraction_range = 0.1;

  void validate() const {
    if (!(repulsion_strength > 0 && repulsion_range > 0 && attraction_strength > 0 &&
          attraction_range > 0)) {
      throw InvalidConfig("interaction potential constants must be positive");
    }
  }

  /// The usual short-range-repulsive / long-range-attractive ordering.
  /// Violations are legal but worth a warning.
  bool is_typical() const {
    return repulsion_strength / repulsion_range > attraction_strength / attraction_range &&
           repulsion_range < attraction_range;
  }

  bool operator==(const InteractionPotentialParams&) const = default;
};

struct NavigationKernelParams {
  double amplitude = 0.05;
  double shape_scale = 0.03;  // divides the squared distance
  double support_radius = 0.15;

  void validate() const {
    if (!(amplitude > 0 && shape_scale > 0 && support_radius > 0)) {
      throw InvalidConfig("navigation kernel parameters must be positive");
    }
  }

  bool operator==(const NavigationKernelParams&) const = default;
};

struct EnvForceParams {
  double uniform_amplitude = 0.01;
  double uniform_rate = std::numbers::pi / 5.0;
  double obstacle_coefficient = 0.0005;
  double obstacle_radius = 0.03;
  double obstacle_min_distance = 0.005;

  void validate() const {
    if (!(uniform_amplitude >= 0 && obstacle_coefficient >= 0 && obstacle_radius > 0 &&
          obstacle_min_distance > 0)) {
      throw InvalidConfig("environment force parameters out of range");
    }
  }

  bool operator==(const EnvForceParams&) const = default;
};

inline double interaction_potential(const Vec2& offset, const InteractionPotentialParams& p) {
  const double r = offset.norm();
  return p.repulsion_strength * std::exp(-r / p.repulsion_range) -
         p.attraction_strength * std::exp(-r / p.attraction_range);
}

/// dU/dr at distance r.
inline double interaction_radial_derivative(double r, const InteractionPotentialParams& p) {
  return -(p.repulsion_strength / p.repulsion_range) * std::exp(-r / p.repulsion_range) +
         (p.attraction_strength / p.attraction_range) * std::exp(-r / p.attraction_range);
}

/// Gradient of the pair potential; the cusp at the origin maps to zero.
inline Vec2 grad_U(const Vec2& offset, const InteractionPotentialParams& p) {
  const double r = offset.norm();
  if (r == 0.0) return Vec2::Zero();
  return (interaction_radial_derivative(r, p) / r) * offset;
}

/// -(1/N) sum_{k != j} grad_U(x_j - x_k) for every human. Each unordered
/// pair is evaluated once and applied with opposite signs.
inline std::vector<Vec2> pairwise_human_forces(std::span<const Vec2> positions,
                                               const InteractionPotentialParams& p) {
  const std::size_t n = positions.size();
  std::vector<Vec2> forces(n, Vec2::Zero());
  if (n < 2) return forces;
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = j + 1; k < n; ++k) {
      const Vec2 g = grad_U(positions[j] - positions[k], p);
      forces[j] -= g;
      forces[k] += g;
    }
  }
  for (auto& f : forces) f *= scale;
  return forces;
}

/// Spatially uniform, time-periodic part of the unknown environment force.
inline Vec2 uniform_env_force(double t, const EnvForceParams& p) {
  const double s = -p.uniform_amplitude * std::sin(p.uniform_rate * t);
  return {s, s};
}

/// Inverse-distance obstacle repulsion, active within `obstacle_radius` of
/// an obstacle centre. Distances are clamped below to avoid blow-up.
inline Vec2 obstacle_env_force(const Vec2& x, std::span<const Vec2> obstacle_centers,
                               const EnvForceParams& p) {
  Vec2 force = Vec2::Zero();
  for (const Vec2& s : obstacle_centers) {
    const Vec2 d = x - s;
    const double dist = d.norm();
    if (dist > p.obstacle_radius) continue;
    if (dist == 0.0) continue;  // no defined direction at the centre itself
    const double r = std::max(dist, p.obstacle_min_distance);
    // -grad (c / |d|) = c d / |d|^3, with |d| clamped in the magnitude
    force += p.obstacle_coefficient / (r * r) * (d / dist);
  }
  return force;
}

inline Vec2 env_force(const Vec2& x, double t, std::span<const Vec2> obstacle_centers,
                      const EnvForceParams& p, ObstacleRegime regime) {
  Vec2 g = uniform_env_force(t, p);
  if (regime != ObstacleRegime::kNone) g += obstacle_env_force(x, obstacle_centers, p);
  return g;
}

inline double navigation_kernel(const Vec2& offset, const NavigationKernelParams& p) {
  const double r2 = offset.squaredNorm();
  if (r2 >= p.support_radius * p.support_radius) return 0.0;
  return p.amplitude * std::exp(-r2 / p.shape_scale);
}

inline Vec2 kernel_gradient(const Vec2& offset, const NavigationKernelParams& p) {
  const double k = navigation_kernel(offset, p);
  return (-2.0 * k / p.shape_scale) * offset;
}

inline Vec2 direction_vector(double theta) { return {std::cos(theta), std::sin(theta)}; }

/// Combined navigation force felt at x: sum_i Kbar(x - r_i) (cos th_i, sin th_i).
inline Vec2 navigation_force(const Vec2& x, const RobotTeamState& robots,
                             const NavigationKernelParams& p) {
  Vec2 f = Vec2::Zero();
  for (std::size_t i = 0; i < robots.size(); ++i) {
    const double k = navigation_kernel(x - robots.positions[i], p);
    if (k != 0.0) f += k * direction_vector(robots.directions[i]);
  }
  return f;
}

inline VectorField navigation_force_field(const RobotTeamState& robots, const Domain& domain,
                                          const NavigationKernelParams& p) {
  return VectorField::from_function(domain,
                                    [&](const Vec2& x) { return navigation_force(x, robots, p); });
}

/// Partial derivatives of robot i's force field at x: with respect to the
/// kernel offset (a 2x2 matrix) and to the sign angle.
struct ForceJacobians {
  Mat2 wrt_offset = Mat2::Zero();
  Vec2 wrt_angle = Vec2::Zero();
};

inline ForceJacobians force_jacobians(const Vec2& x, const Vec2& robot_position, double theta,
                                      const NavigationKernelParams& p) {
  ForceJacobians j;
  const Vec2 offset = x - robot_position;
  const double k = navigation_kernel(offset, p);
  if (k == 0.0) return j;
  const Vec2 dir = direction_vector(theta);
  j.wrt_offset = dir * kernel_gradient(offset, p).transpose();
  j.wrt_angle = k * Vec2(-dir.y(), dir.x());
  return j;
}

}  // namespace crowdevac
