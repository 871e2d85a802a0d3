#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "crowdevac/errors.hpp"
#include "crowdevac/rng.hpp"

namespace crowdevac {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Axis-aligned rectangular workspace sampled by a node-centred grid.
/// Node (i, j) sits at lower + (i * hx, j * hy); i runs along x.
struct Domain {
  Vec2 lower{0.0, 0.0};
  Vec2 upper{1.0, 1.0};
  int resolution = 30;

  void validate() const {
    if (!(upper.x() > lower.x() && upper.y() > lower.y())) {
      throw InvalidConfig("domain upper corner must exceed lower corner component-wise");
    }
    if (resolution < 4) throw InvalidConfig("domain resolution must be at least 4");
  }

  double spacing_x() const { return (upper.x() - lower.x()) / (resolution - 1); }
  double spacing_y() const { return (upper.y() - lower.y()) / (resolution - 1); }
  double cell_area() const { return spacing_x() * spacing_y(); }
  Vec2 extent() const { return upper - lower; }
  Vec2 center() const { return 0.5 * (lower + upper); }

  Vec2 node(int i, int j) const {
    return {lower.x() + i * spacing_x(), lower.y() + j * spacing_y()};
  }

  bool contains(const Vec2& p) const {
    return p.x() >= lower.x() && p.x() <= upper.x() && p.y() >= lower.y() && p.y() <= upper.y();
  }

  Vec2 clamp(const Vec2& p) const {
    return {std::clamp(p.x(), lower.x(), upper.x()), std::clamp(p.y(), lower.y(), upper.y())};
  }

  bool operator==(const Domain& other) const {
    return lower == other.lower && upper == other.upper && resolution == other.resolution;
  }
};

struct HumanCrowdState {
  std::vector<Vec2> positions;
  std::vector<Vec2> velocities;

  std::size_t size() const { return positions.size(); }
};

struct RobotTeamState {
  std::vector<Vec2> positions;
  std::vector<Vec2> velocities;
  std::vector<double> directions;  // sign angle, kept in [0, 2pi)
  std::vector<double> masses;

  std::size_t size() const { return positions.size(); }
};

inline double wrap_angle(double theta) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double wrapped = std::fmod(theta, kTwoPi);
  if (wrapped < 0.0) wrapped += kTwoPi;
  // fmod of a tiny negative value can round up to exactly 2pi.
  if (wrapped >= kTwoPi) wrapped = 0.0;
  return wrapped;
}

enum class ObstacleRegime { kNone, kStatic, kDynamic };

inline std::string_view to_string(ObstacleRegime regime) {
  switch (regime) {
    case ObstacleRegime::kNone: return "none";
    case ObstacleRegime::kStatic: return "static";
    case ObstacleRegime::kDynamic: return "dynamic";
  }
  return "none";
}

inline ObstacleRegime regime_from_string(std::string_view name) {
  if (name == "none") return ObstacleRegime::kNone;
  if (name == "static") return ObstacleRegime::kStatic;
  if (name == "dynamic") return ObstacleRegime::kDynamic;
  throw InvalidConfig("unknown obstacle regime '" + std::string(name) + "'");
}

enum class ObstacleMotion { kStatic, kHorizontal, kVertical };

struct ObstacleGeometry {
  Vec2 half_extent{0.025, 0.025};
  double amplitude = 0.1;
  double angular_rate = 0.2;

  bool operator==(const ObstacleGeometry& other) const {
    return half_extent == other.half_extent && amplitude == other.amplitude &&
           angular_rate == other.angular_rate;
  }
};

struct Obstacle {
  Vec2 base_center{0.0, 0.0};
  Vec2 half_extent{0.025, 0.025};
  ObstacleMotion motion = ObstacleMotion::kStatic;
  double amplitude = 0.1;
  double angular_rate = 0.2;
  double sign = 1.0;  // picks the +/- branch of the oscillation

  /// Centre at time t: the base centre, displaced along one axis by
  /// sign * amplitude * sin(rate * t) for oscillating obstacles.
  Vec2 center_at(double t) const {
    Vec2 c = base_center;
    const double offset = sign * amplitude * std::sin(angular_rate * t);
    if (motion == ObstacleMotion::kHorizontal) c.x() += offset;
    if (motion == ObstacleMotion::kVertical) c.y() += offset;
    return c;
  }
};

struct ObstacleSet {
  std::vector<Obstacle> obstacles;
  std::vector<Vec2> centers;  // positions at `time`
  double time = 0.0;

  void move_to(double t) {
    time = t;
    centers.resize(obstacles.size());
    for (std::size_t l = 0; l < obstacles.size(); ++l) centers[l] = obstacles[l].center_at(t);
  }

  std::size_t size() const { return obstacles.size(); }
  bool empty() const { return obstacles.empty(); }
};

struct TargetDensity {
  Vec2 safe_location{13.0 / 16.0, 0.5};
  double spread = 0.085;

  bool operator==(const TargetDensity& other) const {
    return safe_location == other.safe_location && spread == other.spread;
  }
};

/// N humans i.i.d. uniform over the domain, all at rest.
inline HumanCrowdState init_humans_uniform(std::size_t count, const Domain& domain,
                                           std::uint64_t seed) {
  if (count == 0) throw InvalidConfig("human count must be at least 1");
  Rng rng(substream_seed(seed, Stream::kHumans));
  HumanCrowdState crowd;
  crowd.positions.reserve(count);
  for (std::size_t j = 0; j < count; ++j) {
    const double x = rng.uniform(domain.lower.x(), domain.upper.x());
    const double y = rng.uniform(domain.lower.y(), domain.upper.y());
    crowd.positions.emplace_back(x, y);
  }
  crowd.velocities.assign(count, Vec2::Zero());
  return crowd;
}

inline constexpr double kRobotLatticeSpacing = 0.05;

/// Robots on a ceil(sqrt(n))-wide lattice anchored one spacing in from
/// the lower-left corner; sign directions uniform on [0, 2pi).
inline RobotTeamState init_robots_corner_array(std::size_t count, const Domain& domain,
                                               std::uint64_t seed, double mass = 1.0) {
  if (count == 0) throw InvalidConfig("robot count must be at least 1");
  const auto per_row = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(count))));
  Rng rng(substream_seed(seed, Stream::kRobotDirections));
  RobotTeamState team;
  for (std::size_t k = 0; k < count; ++k) {
    const double col = static_cast<double>(k % per_row);
    const double row = static_cast<double>(k / per_row);
    const Vec2 p = domain.lower + Vec2(kRobotLatticeSpacing * (1.0 + col),
                                       kRobotLatticeSpacing * (1.0 + row));
    team.positions.push_back(domain.clamp(p));
    team.directions.push_back(wrap_angle(rng.angle()));
  }
  team.velocities.assign(count, Vec2::Zero());
  team.masses.assign(count, mass);
  return team;
}

/// Rejection-samples obstacle squares uniformly inside the domain, keeping
/// the full swept footprint of every obstacle out of the evacuation disk.
inline ObstacleSet place_obstacles(std::size_t count, ObstacleRegime regime, const Domain& domain,
                                   const TargetDensity& target, double evacuation_radius,
                                   const ObstacleGeometry& geometry, std::uint64_t seed) {
  ObstacleSet set;
  if (regime == ObstacleRegime::kNone || count == 0) {
    set.move_to(0.0);
    return set;
  }
  Rng rng(substream_seed(seed, Stream::kObstacles));
  constexpr int kMaxAttempts = 100000;
  int attempts = 0;
  while (set.obstacles.size() < count) {
    if (++attempts > kMaxAttempts) {
      throw InvalidConfig("could not place obstacles outside the evacuation disk");
    }
    Obstacle ob;
    ob.half_extent = geometry.half_extent;
    ob.amplitude = geometry.amplitude;
    ob.angular_rate = geometry.angular_rate;
    ob.base_center = {rng.uniform(domain.lower.x() + ob.half_extent.x(),
                                  domain.upper.x() - ob.half_extent.x()),
                      rng.uniform(domain.lower.y() + ob.half_extent.y(),
                                  domain.upper.y() - ob.half_extent.y())};
    Vec2 sweep = Vec2::Zero();
    if (regime == ObstacleRegime::kDynamic) {
      ob.motion = rng.coin() ? ObstacleMotion::kHorizontal : ObstacleMotion::kVertical;
      ob.sign = rng.coin() ? 1.0 : -1.0;
      if (ob.motion == ObstacleMotion::kHorizontal) sweep.x() = ob.amplitude;
      else sweep.y() = ob.amplitude;
    }
    // Distance from the disk centre to the swept rectangle.
    const Vec2 reach = ob.half_extent + sweep;
    const Vec2 d = ((target.safe_location - ob.base_center).cwiseAbs() - reach).cwiseMax(0.0);
    if (d.norm() <= evacuation_radius) continue;
    set.obstacles.push_back(ob);
  }
  set.move_to(0.0);
  return set;
}

}  // namespace crowdevac
