#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "crowdevac/domain.hpp"
#include "crowdevac/field.hpp"
#include "crowdevac/social_forces.hpp"

namespace crowdevac {

// ---------------------------------------------------------------------------
// Position control: potential-field coverage.

struct PositionControlParams {
  double robot_repulsion = 0.003;
  double obstacle_repulsion = 0.002;
  double viscosity = 1.0;
  double sensing_radius = 0.2;
  double min_distance = 0.01;
  bool walls_as_obstacles = false;  // walls repel like point obstacles when enabled
  double wall_repulsion = 0.002;

  void validate() const {
    if (!(robot_repulsion > 0 && obstacle_repulsion > 0 && viscosity > 0 && sensing_radius > 0 &&
          min_distance > 0)) {
      throw InvalidConfig("position control gains must be positive");
    }
  }

  bool operator==(const PositionControlParams&) const = default;
};

namespace detail {

// -grad_r (k / |r - s|) = k (r - s) / |r - s|^3, distance clamped below.
inline Vec2 inverse_distance_repulsion(const Vec2& r, const Vec2& s, double gain, double min_dist) {
  const Vec2 d = r - s;
  const double dist = d.norm();
  if (dist == 0.0) return Vec2::Zero();
  const double c = std::max(dist, min_dist);
  return gain / (c * c) * (d / dist);
}

}  // namespace detail

/// Acceleration command tau_i = (f_i - nu * rdot_i) / m_i for robot i.
inline Vec2 position_control(std::size_t i, const RobotTeamState& robots,
                             std::span<const Vec2> obstacle_centers,
                             const PositionControlParams& p, const Domain* walls = nullptr) {
  const Vec2& ri = robots.positions[i];
  Vec2 f = Vec2::Zero();
  for (std::size_t k = 0; k < robots.size(); ++k) {
    if (k == i) continue;
    f += detail::inverse_distance_repulsion(ri, robots.positions[k], p.robot_repulsion,
                                            p.min_distance);
  }
  for (const Vec2& s : obstacle_centers) {
    if ((ri - s).norm() > p.sensing_radius) continue;
    f += detail::inverse_distance_repulsion(ri, s, p.obstacle_repulsion, p.min_distance);
  }
  if (walls && p.walls_as_obstacles) {
    for (int axis = 0; axis < 2; ++axis) {
      for (double wall : {walls->lower(axis), walls->upper(axis)}) {
        Vec2 s = ri;
        s(axis) = wall;
        const double dist = std::abs(ri(axis) - wall);
        if (dist > p.sensing_radius) continue;
        Vec2 push = Vec2::Zero();
        const double c = std::max(dist, p.min_distance);
        push(axis) = (wall == walls->lower(axis) ? 1.0 : -1.0) * p.wall_repulsion / (c * c);
        f += push;
      }
    }
  }
  return (f - p.viscosity * robots.velocities[i]) / robots.masses[i];
}

// ---------------------------------------------------------------------------
// Direction control: density feedback, adaptive compensation, backstepping.

struct DirectionControlParams {
  double density_gain = 0.05;  // k_rho' of the normalized density gain
  double velocity_gain = 0.1;
  double force_gain = 0.1;
  double gradient_epsilon = 1e-6;
  double controllability_epsilon = 1e-8;
  double max_rate = std::numbers::pi;

  void validate() const {
    if (!(density_gain > 0 && velocity_gain > 0 && force_gain > 0 && gradient_epsilon > 0 &&
          controllability_epsilon > 0 && max_rate > 0)) {
      throw InvalidConfig("direction control gains must be positive");
    }
  }

  bool operator==(const DirectionControlParams&) const = default;
};

/// u_d = -k' grad(rho - rho*) / (|grad(rho - rho*)| + eps): a flow of
/// (nearly) constant speed k' down the density error.
inline VectorField virtual_velocity(const ScalarField& rho, const ScalarField& rho_target,
                                    const DirectionControlParams& p) {
  VectorField g = gradient(rho - rho_target);
  const Grid scale = -p.density_gain / ((g.x().square() + g.y().square()).sqrt() + p.gradient_epsilon);
  g.x() *= scale;
  g.y() *= scale;
  return g;
}

struct AdaptiveParams {
  int lattice = 5;       // RBF centres per axis
  double width = 0.15;   // phi(x) = exp(-|x - c|^2 / width^2)
  double gain = 0.1;     // Gamma, a multiple of the identity
  double leakage = 0.1;  // k_w

  void validate() const {
    if (lattice < 1) throw InvalidConfig("RBF lattice must have at least one centre per axis");
    if (!(width > 0 && gain > 0 && leakage > 0)) {
      throw InvalidConfig("adaptive law parameters must be positive");
    }
  }

  bool operator==(const AdaptiveParams&) const = default;
};

/// Linear-in-weights RBF approximation of the unknown environment force.
/// The x component uses weights [0, m) and the y component [m, 2m), both
/// over the same Gaussian features.
class AdaptiveApproximator {
 public:
  AdaptiveApproximator() = default;
  AdaptiveApproximator(const Domain& domain, const AdaptiveParams& params)
      : domain_(domain), params_(params) {
    params.validate();
    const int c = params.lattice;
    for (int b = 0; b < c; ++b) {
      for (int a = 0; a < c; ++a) {
        const double fx = c == 1 ? 0.5 : static_cast<double>(a) / (c - 1);
        const double fy = c == 1 ? 0.5 : static_cast<double>(b) / (c - 1);
        centers_.push_back(domain.lower + Vec2(fx * domain.extent().x(), fy * domain.extent().y()));
      }
    }
    const int r = domain.resolution;
    features_.resize(static_cast<Eigen::Index>(r) * r, basis_size());
    for (int j = 0; j < r; ++j)
      for (int i = 0; i < r; ++i) features_.row(i + j * r) = features_at(domain.node(i, j)).transpose();
    weights_ = Eigen::VectorXd::Zero(2 * basis_size());
  }

  Eigen::Index basis_size() const { return static_cast<Eigen::Index>(centers_.size()); }
  const std::vector<Vec2>& centers() const { return centers_; }
  const Eigen::MatrixXd& features() const { return features_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  const AdaptiveParams& params() const { return params_; }
  const Domain& domain() const { return domain_; }

  void set_weights(const Eigen::VectorXd& w) {
    if (w.size() != 2 * basis_size()) throw DimensionMismatch("weight vector has wrong length");
    weights_ = w;
  }

  Eigen::VectorXd features_at(const Vec2& x) const {
    Eigen::VectorXd phi(basis_size());
    const double inv = 1.0 / (params_.width * params_.width);
    for (Eigen::Index k = 0; k < basis_size(); ++k) {
      phi(k) = std::exp(-(x - centers_[static_cast<std::size_t>(k)]).squaredNorm() * inv);
    }
    return phi;
  }

  Vec2 predict_at(const Vec2& x) const {
    const Eigen::VectorXd phi = features_at(x);
    const Eigen::Index m = basis_size();
    return {phi.dot(weights_.head(m)), phi.dot(weights_.tail(m))};
  }

  /// phi^T w on every grid node.
  VectorField predict() const {
    const int r = domain_.resolution;
    const Eigen::Index m = basis_size();
    const Eigen::VectorXd gx = features_ * weights_.head(m);
    const Eigen::VectorXd gy = features_ * weights_.tail(m);
    return VectorField(domain_, Eigen::Map<const Grid>(gx.data(), r, r),
                       Eigen::Map<const Grid>(gy.data(), r, r));
  }

  /// Forward-Euler step of w' = Gamma (int phi u_err dx - k_w w).
  void update(const VectorField& velocity_error, double dt) {
    if (!(dt >= 0.0)) throw InvalidConfig("adaptation step must be nonnegative");
    const Eigen::VectorXd drive = integrate_weighted(features_, velocity_error);
    weights_ += dt * params_.gain * (drive - params_.leakage * weights_);
  }

 private:
  Domain domain_;
  AdaptiveParams params_;
  std::vector<Vec2> centers_;
  Eigen::MatrixXd features_;
  Eigen::VectorXd weights_;
};

/// Previous-iteration fields for the backward-difference time derivatives.
struct ControllerMemory {
  std::optional<VectorField> virtual_velocity;
  std::optional<VectorField> desired_force;
  double time = 0.0;

  void clear() {
    virtual_velocity.reset();
    desired_force.reset();
    time = 0.0;
  }
};

/// Everything the desired force field is assembled from, on one grid.
struct DesiredForceInputs {
  const ScalarField& density;
  const ScalarField& density_error;
  const VectorField& velocity;
  const VectorField& velocity_error;
  const VectorField& virtual_velocity_rate;
  const VectorField& interaction;       // grad U * rho
  const VectorField& adaptive_estimate; // phi^T w_hat
};

/// F_d = -k_u u_err - rho grad(rho_err) + (u . grad) u + gradU * rho
///       - phi^T w_hat + d/dt u_d.
inline VectorField desired_force(const DesiredForceInputs& in, const DirectionControlParams& p) {
  VectorField fd = in.velocity_error * (-p.velocity_gain);
  fd -= (in.density * gradient(in.density_error));
  fd += advection(in.velocity);
  fd += in.interaction;
  fd -= in.adaptive_estimate;
  fd += in.virtual_velocity_rate;
  return fd;
}

struct BetaAllocation {
  std::vector<double> betas;
  std::vector<double> integrals;  // int over robot i's support of F_err . F_theta^i
  std::size_t active = 0;
  bool controllable() const { return active > 0; }
};

namespace detail {

// Visits the grid nodes inside robot i's support disk.
template <typename Fn>
void for_each_support_node(const Domain& d, const Vec2& center, double radius, Fn&& fn) {
  const int last = d.resolution - 1;
  const int i0 = std::max(0, static_cast<int>(std::floor((center.x() - radius - d.lower.x()) / d.spacing_x())));
  const int i1 = std::min(last, static_cast<int>(std::ceil((center.x() + radius - d.lower.x()) / d.spacing_x())));
  const int j0 = std::max(0, static_cast<int>(std::floor((center.y() - radius - d.lower.y()) / d.spacing_y())));
  const int j1 = std::min(last, static_cast<int>(std::ceil((center.y() + radius - d.lower.y()) / d.spacing_y())));
  for (int j = j0; j <= j1; ++j)
    for (int i = i0; i <= i1; ++i) fn(i, j, d.node(i, j));
}

}  // namespace detail

/// beta_i = 1/n' for the n' robots whose angular derivative still moves the
/// force error (|I_i| > eps), zero for the rest.
inline BetaAllocation beta_weights(const VectorField& force_error, const RobotTeamState& robots,
                                   const NavigationKernelParams& kernel,
                                   const DirectionControlParams& p) {
  const Domain& d = force_error.domain();
  const double area = d.cell_area();
  BetaAllocation out;
  out.betas.assign(robots.size(), 0.0);
  out.integrals.assign(robots.size(), 0.0);
  for (std::size_t i = 0; i < robots.size(); ++i) {
    double acc = 0.0;
    detail::for_each_support_node(d, robots.positions[i], kernel.support_radius,
                                  [&](int a, int b, const Vec2& x) {
      const auto jac = force_jacobians(x, robots.positions[i], robots.directions[i], kernel);
      acc += force_error.at(a, b).dot(jac.wrt_angle);
    });
    out.integrals[i] = acc * area;
    if (std::abs(out.integrals[i]) > p.controllability_epsilon) ++out.active;
  }
  if (out.active == 0) return out;
  const double share = 1.0 / static_cast<double>(out.active);
  for (std::size_t i = 0; i < robots.size(); ++i) {
    if (std::abs(out.integrals[i]) > p.controllability_epsilon) out.betas[i] = share;
  }
  return out;
}

/// sum_i F_xi^i(x) rdot_i on the grid: the part of dF/dt due to robot motion.
inline VectorField robot_motion_field(const RobotTeamState& robots, const Domain& d,
                                      const NavigationKernelParams& kernel) {
  VectorField out(d);
  for (std::size_t i = 0; i < robots.size(); ++i) {
    detail::for_each_support_node(d, robots.positions[i], kernel.support_radius,
                                  [&](int a, int b, const Vec2& x) {
      const auto jac = force_jacobians(x, robots.positions[i], robots.directions[i], kernel);
      out.set(a, b, out.at(a, b) + jac.wrt_offset * robots.velocities[i]);
    });
  }
  return out;
}

struct DirectionRateInputs {
  const VectorField& force_error;       // F - F_d
  const VectorField& desired_force_rate;
  const VectorField& velocity_error;
  const RobotTeamState& robots;
  const BetaAllocation& allocation;
};

/// eta_i = -(beta_i int F_err.(u_err - dF_d/dt - sum F_xi rdot) + k_eta int |F_err|^2)
///         / int_{Omega_i} F_err . F_theta^i, saturated to +-max_rate.
inline std::vector<double> direction_rates(const DirectionRateInputs& in,
                                           const NavigationKernelParams& kernel,
                                           const DirectionControlParams& p) {
  const std::size_t n = in.robots.size();
  std::vector<double> eta(n, 0.0);
  if (!in.allocation.controllable()) return eta;
  const Domain& d = in.force_error.domain();
  VectorField drift = in.velocity_error - in.desired_force_rate;
  drift -= robot_motion_field(in.robots, d, kernel);
  const double shared = dot_integral(in.force_error, drift);
  const double error_energy = dot_integral(in.force_error, in.force_error);
  for (std::size_t i = 0; i < n; ++i) {
    const double beta = in.allocation.betas[i];
    if (beta <= 0.0) continue;
    const double denom = in.allocation.integrals[i];
    if (std::abs(denom) <= p.controllability_epsilon) {
      throw ControlError("active robot " + std::to_string(i) + " has a vanishing angular integral");
    }
    const double rate = -(beta * shared + p.force_gain * error_energy) / denom;
    eta[i] = std::clamp(rate, -p.max_rate, p.max_rate);
  }
  return eta;
}

}  // namespace crowdevac
