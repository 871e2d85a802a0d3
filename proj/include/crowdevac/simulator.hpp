#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "crowdevac/control.hpp"
#include "crowdevac/domain.hpp"
#include "crowdevac/estimation.hpp"
#include "crowdevac/field.hpp"
#include "crowdevac/social_forces.hpp"
#include "crowdevac/target.hpp"

namespace crowdevac {

/// Switches for isolating parts of the dynamics in tests and ablations.
struct PhysicsSwitches {
  bool human_interaction = true;
  bool environment_force = true;
  bool navigation_force = true;
  bool robot_control = true;
  bool adaptation = true;

  bool operator==(const PhysicsSwitches&) const = default;
};

struct SimConfig {
  std::size_t humans = 250;
  std::size_t robots = 16;
  double dt = 0.1;
  double horizon = 80.0;
  ObstacleRegime regime = ObstacleRegime::kNone;
  std::size_t obstacle_count = 5;
  std::uint64_t seed = 1;
  double evacuation_radius = 0.15;
  double stop_threshold = 0.0;  // gamma: stop once the density error drops to it
  double robot_mass = 1.0;

  Domain domain;
  TargetDensity target;
  ObstacleGeometry obstacle;
  InteractionPotentialParams potential;
  NavigationKernelParams kernel;
  EnvForceParams env;
  KdeConfig kde;
  VelocityEstimatorConfig velocity;
  PositionControlParams position;
  DirectionControlParams direction;
  AdaptiveParams adaptive;
  PhysicsSwitches physics;

  void validate() const {
    if (humans < 1) throw InvalidConfig("humans must be positive");
    if (robots < 1) throw InvalidConfig("robots must be positive");
    if (!(dt > 0.0)) throw InvalidConfig("dt must be positive");
    if (!(horizon >= 0.0)) throw InvalidConfig("horizon must be nonnegative");
    if (!(evacuation_radius > 0.0)) throw InvalidConfig("evacuation radius must be positive");
    if (!(stop_threshold >= 0.0)) throw InvalidConfig("stop threshold must be nonnegative");
    if (!(robot_mass > 0.0)) throw InvalidConfig("robot mass must be positive");
    if (!(target.spread > 0.0)) throw InvalidConfig("target spread must be positive");
    if (!domain.contains(target.safe_location)) {
      throw InvalidConfig("safe location must lie inside the domain");
    }
    if (!(obstacle.half_extent.x() > 0 && obstacle.half_extent.y() > 0 && obstacle.amplitude >= 0)) {
      throw InvalidConfig("obstacle geometry out of range");
    }
    domain.validate();
    potential.validate();
    kernel.validate();
    env.validate();
    kde.validate();
    velocity.validate();
    position.validate();
    direction.validate();
    adaptive.validate();
  }

  std::size_t iteration_count() const {
    return static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
  }

  bool operator==(const SimConfig&) const = default;
};

/// Grid fields computed from one state, in the order the controller needs them.
struct FieldCache {
  ScalarField density;
  ScalarField density_error;
  VectorField velocity;
  VectorField virtual_velocity;
  VectorField velocity_error;
  VectorField navigation;
  VectorField desired_force;
  VectorField force_error;
};

struct SimState {
  std::size_t iteration = 0;
  double time = 0.0;
  HumanCrowdState humans;
  RobotTeamState robots;
  ObstacleSet obstacles;
  AdaptiveApproximator approximator;
  ControllerMemory memory;
  std::optional<FieldCache> cache;
};

/// Everything derived from a state at time t: the fields plus the robot
/// commands that would be applied over [t, t + dt].
struct Evaluation {
  FieldCache fields;
  VectorField virtual_velocity_rate;
  VectorField desired_force_rate;
  BetaAllocation allocation;
  std::vector<double> direction_rates;
  std::vector<Vec2> accelerations;
};

struct MetricsRow {
  double time = 0.0;
  double density_error = 0.0;
  double velocity_error = 0.0;
  double force_error = 0.0;
  double weight_norm = 0.0;
  double lyapunov = 0.0;
  double evacuation_rate = 0.0;
  double mean_speed = 0.0;

  bool operator==(const MetricsRow&) const = default;
};

struct RobotSample {
  std::size_t iteration = 0;
  std::vector<Vec2> positions;
  std::vector<double> directions;
};

struct RunMetrics {
  std::vector<MetricsRow> rows;
  std::vector<RobotSample> robot_trace;  // every `trace_every` iterations, if enabled
  HumanCrowdState final_humans;
  RobotTeamState final_robots;
};

/// Percentage of humans inside the closed disk of `radius` around `safe`.
inline double evacuation_rate(const HumanCrowdState& crowd, const Vec2& safe, double radius) {
  if (!(radius > 0.0)) throw InvalidConfig("evacuation radius must be positive");
  if (crowd.size() == 0) return 0.0;
  std::size_t inside = 0;
  for (const Vec2& x : crowd.positions) {
    if ((x - safe).norm() <= radius) ++inside;
  }
  return 100.0 * static_cast<double>(inside) / static_cast<double>(crowd.size());
}

/// Fraction of grid nodes within `radius` of at least one robot.
inline double coverage_fraction(std::span<const Vec2> robot_positions, const Domain& domain,
                                double radius) {
  if (!(radius > 0.0)) throw InvalidConfig("influence radius must be positive");
  const int r = domain.resolution;
  std::size_t covered = 0;
  for (int j = 0; j < r; ++j) {
    for (int i = 0; i < r; ++i) {
      const Vec2 x = domain.node(i, j);
      for (const Vec2& p : robot_positions) {
        if ((x - p).norm() <= radius) {
          ++covered;
          break;
        }
      }
    }
  }
  return static_cast<double>(covered) / static_cast<double>(r * r);
}

/// Clamps positions into the domain and zeroes the outward normal velocity
/// component at the walls (discrete zero-flux condition).
inline void project_to_domain(std::vector<Vec2>& positions, std::vector<Vec2>& velocities,
                              const Domain& d) {
  for (std::size_t k = 0; k < positions.size(); ++k) {
    Vec2& x = positions[k];
    Vec2& v = velocities[k];
    for (int axis = 0; axis < 2; ++axis) {
      if (x(axis) <= d.lower(axis)) {
        x(axis) = d.lower(axis);
        if (v(axis) < 0.0) v(axis) = 0.0;
      } else if (x(axis) >= d.upper(axis)) {
        x(axis) = d.upper(axis);
        if (v(axis) > 0.0) v(axis) = 0.0;
      }
    }
  }
}

/// Time-stepping engine: estimation, control, and semi-implicit Euler
/// integration of humans and robots on a fixed configuration.
class Simulator {
 public:
  explicit Simulator(SimConfig config)
      : config_((config.validate(), std::move(config))),
        target_(target_density_field(config_.target, config_.domain)),
        interaction_(config_.domain, [p = config_.potential](const Vec2& offset) {
          return grad_U(offset, p);
        }) {}

  const SimConfig& config() const { return config_; }
  const ScalarField& target_density() const { return target_; }

  SimState initial_state() const {
    SimState s;
    s.humans = init_humans_uniform(config_.humans, config_.domain, config_.seed);
    s.robots = init_robots_corner_array(config_.robots, config_.domain, config_.seed, config_.robot_mass);
    s.obstacles = place_obstacles(config_.obstacle_count, config_.regime, config_.domain,
                                  config_.target, config_.evacuation_radius, config_.obstacle,
                                  config_.seed);
    s.approximator = AdaptiveApproximator(config_.domain, config_.adaptive);
    return s;
  }

  /// Fields and commands at the state's current time. Does not mutate.
  Evaluation evaluate(const SimState& s) const {
    const SimConfig& c = config_;
    const Domain& d = c.domain;
    Evaluation ev;
    FieldCache& f = ev.fields;
    f.density = kde_density(s.humans.positions, c.kde, d);
    f.density_error = f.density - target_;
    f.velocity = velocity_field_estimate(s.humans.positions, s.humans.velocities, c.velocity, d);
    f.virtual_velocity = virtual_velocity(f.density, target_, c.direction);
    f.velocity_error = f.velocity - f.virtual_velocity;
    f.navigation = c.physics.navigation_force ? navigation_force_field(s.robots, d, c.kernel)
                                              : VectorField(d);
    ev.virtual_velocity_rate = time_derivative(s.memory.virtual_velocity, f.virtual_velocity, c.dt);
    const VectorField interaction = interaction_.apply(f.density);
    const VectorField adaptive = s.approximator.predict();
    f.desired_force = desired_force({f.density, f.density_error, f.velocity, f.velocity_error,
                                     ev.virtual_velocity_rate, interaction, adaptive},
                                    c.direction);
    f.force_error = f.navigation - f.desired_force;
    ev.desired_force_rate = time_derivative(s.memory.desired_force, f.desired_force, c.dt);

    const std::size_t n = s.robots.size();
    ev.direction_rates.assign(n, 0.0);
    ev.accelerations.assign(n, Vec2::Zero());
    if (c.physics.robot_control) {
      ev.allocation = beta_weights(f.force_error, s.robots, c.kernel, c.direction);
      ev.direction_rates = direction_rates({f.force_error, ev.desired_force_rate, f.velocity_error,
                                            s.robots, ev.allocation},
                                           c.kernel, c.direction);
      for (std::size_t i = 0; i < n; ++i) {
        ev.accelerations[i] = position_control(i, s.robots, s.obstacles.centers, c.position, &d);
      }
    } else {
      ev.allocation.betas.assign(n, 0.0);
      ev.allocation.integrals.assign(n, 0.0);
    }
    return ev;
  }

  MetricsRow metrics(const SimState& s, const Evaluation& ev) const {
    const FieldCache& f = ev.fields;
    MetricsRow row;
    row.time = s.time;
    row.density_error = l2_norm(f.density_error);
    row.velocity_error = l2_norm(f.velocity_error);
    row.force_error = l2_norm(f.force_error);
    row.weight_norm = s.approximator.weights().norm();
    row.lyapunov = 0.5 * (row.density_error * row.density_error +
                          row.velocity_error * row.velocity_error +
                          row.force_error * row.force_error);
    row.evacuation_rate = evacuation_rate(s.humans, config_.target.safe_location,
                                          config_.evacuation_radius);
    double speed = 0.0;
    for (const Vec2& v : s.humans.velocities) speed += v.norm();
    row.mean_speed = speed / static_cast<double>(s.humans.size());
    return row;
  }

  /// Applies the commands of `ev` over one time step and advances t.
  void advance(SimState& s, Evaluation ev) const {
    const SimConfig& c = config_;
    const double dt = c.dt;
    const double t = s.time;

    if (c.physics.adaptation) s.approximator.update(ev.fields.velocity_error, dt);
    s.memory.virtual_velocity = ev.fields.virtual_velocity;
    s.memory.desired_force = ev.fields.desired_force;
    s.memory.time = t;

    const std::size_t n = s.humans.size();
    std::vector<Vec2> accel(n, Vec2::Zero());
    if (c.physics.human_interaction) accel = pairwise_human_forces(s.humans.positions, c.potential);
    for (std::size_t j = 0; j < n; ++j) {
      const Vec2& x = s.humans.positions[j];
      if (c.physics.environment_force) accel[j] += env_force(x, t, s.obstacles.centers, c.env, c.regime);
      if (c.physics.navigation_force) accel[j] += navigation_force(x, s.robots, c.kernel);
    }

    // Human forces above use the time-t robot states; robots move after.
    for (std::size_t i = 0; i < s.robots.size(); ++i) {
      s.robots.velocities[i] += dt * ev.accelerations[i];
      s.robots.positions[i] += dt * s.robots.velocities[i];
      s.robots.directions[i] = wrap_angle(s.robots.directions[i] + dt * ev.direction_rates[i]);
    }
    for (std::size_t j = 0; j < n; ++j) {
      s.humans.velocities[j] += dt * accel[j];
      s.humans.positions[j] += dt * s.humans.velocities[j];
    }

    project_to_domain(s.humans.positions, s.humans.velocities, c.domain);
    project_to_domain(s.robots.positions, s.robots.velocities, c.domain);

    s.cache = std::move(ev.fields);
    ++s.iteration;
    s.time = static_cast<double>(s.iteration) * dt;
    s.obstacles.move_to(s.time);
    check_finite(s);
  }

  /// One iteration: estimate, control, integrate. Returns what was applied.
  Evaluation step(SimState& s) const {
    Evaluation ev = evaluate(s);
    Evaluation applied = ev;
    advance(s, std::move(ev));
    return applied;
  }

  using Observer = std::function<void(const SimState&, const Evaluation&)>;

  /// Runs until the horizon or until the density error reaches the stop
  /// threshold. One metrics row per visited time, the initial one included.
  RunMetrics run(const Observer& observer = {}, std::size_t trace_every = 0) const {
    SimState s = initial_state();
    RunMetrics out;
    const std::size_t max_iter = config_.iteration_count();
    while (true) {
      Evaluation ev = evaluate(s);
      const MetricsRow row = metrics(s, ev);
      if (!row_is_finite(row)) throw SimulationDiverged(s.iteration, "metrics");
      out.rows.push_back(row);
      if (trace_every > 0 && s.iteration % trace_every == 0) {
        out.robot_trace.push_back({s.iteration, s.robots.positions, s.robots.directions});
      }
      if (observer) observer(s, ev);
      if (s.iteration >= max_iter || row.density_error <= config_.stop_threshold) break;
      advance(s, std::move(ev));
    }
    out.final_humans = std::move(s.humans);
    out.final_robots = std::move(s.robots);
    return out;
  }

 private:
  static bool row_is_finite(const MetricsRow& r) {
    return std::isfinite(r.density_error) && std::isfinite(r.velocity_error) &&
           std::isfinite(r.force_error) && std::isfinite(r.weight_norm) &&
           std::isfinite(r.lyapunov) && std::isfinite(r.mean_speed);
  }

  static void check_finite(const SimState& s) {
    auto finite = [](const std::vector<Vec2>& v) {
      for (const Vec2& p : v)
        if (!p.allFinite()) return false;
      return true;
    };
    if (!finite(s.humans.positions) || !finite(s.humans.velocities)) {
      throw SimulationDiverged(s.iteration, "human state");
    }
    if (!finite(s.robots.positions) || !finite(s.robots.velocities)) {
      throw SimulationDiverged(s.iteration, "robot state");
    }
    for (double th : s.robots.directions) {
      if (!std::isfinite(th)) throw SimulationDiverged(s.iteration, "robot direction");
    }
    if (!s.approximator.weights().allFinite()) throw SimulationDiverged(s.iteration, "adaptive weights");
  }

  SimConfig config_;
  ScalarField target_;
  OffsetKernelTable interaction_;
};

inline RunMetrics run(const SimConfig& config) { return Simulator(config).run(); }

}  // namespace crowdevac
