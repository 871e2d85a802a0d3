#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "crowdevac/social_forces.hpp"

using namespace crowdevac;

namespace {

Vec2 numeric_gradient(const auto& fn, const Vec2& x, double h = 1e-6) {
  return {(fn(x + Vec2(h, 0)) - fn(x - Vec2(h, 0))) / (2 * h),
          (fn(x + Vec2(0, h)) - fn(x - Vec2(0, h))) / (2 * h)};
}

}  // namespace

TEST(Potential, DefaultsAreTypicalAndRepulsiveUpClose) {
  InteractionPotentialParams p;
  EXPECT_TRUE(p.is_typical());
  // U'(r) < 0 below the crossover ~0.139, > 0 beyond
  EXPECT_LT(interaction_radial_derivative(0.05, p), 0.0);
  EXPECT_GT(interaction_radial_derivative(0.2, p), 0.0);
  // 0.4 e^{-20 r} = 0.1 e^{-10 r} at r = ln 4 / 10
  EXPECT_NEAR(interaction_radial_derivative(std::log(4.0) / 10.0, p), 0.0, 1e-15);
}

TEST(Potential, GradientAtOriginIsZero) { EXPECT_EQ(grad_U(Vec2::Zero(), {}), Vec2::Zero()); }

TEST(Potential, GradientMatchesFiniteDifferences) {
  InteractionPotentialParams p;
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int k = 0; k < 100; ++k) {
    Vec2 x(u(gen), u(gen));
    if (x.norm() < 1e-3) x = Vec2(0.01, 0.02);
    const Vec2 fd = numeric_gradient([&](const Vec2& y) { return interaction_potential(y, p); }, x);
    EXPECT_LE((fd - grad_U(x, p)).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(PairwiseForces, MatchesNaiveDoubleLoop) {
  InteractionPotentialParams p;
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vec2> x(50);
  for (auto& v : x) v = Vec2(u(gen), u(gen));
  x[7] = x[3];  // coincident pair contributes nothing
  const auto fast = pairwise_human_forces(x, p);
  for (std::size_t j = 0; j < x.size(); ++j) {
    Vec2 acc = Vec2::Zero();
    for (std::size_t k = 0; k < x.size(); ++k)
      if (k != j) acc -= grad_U(x[j] - x[k], p);
    acc /= 50.0;
    EXPECT_LE((acc - fast[j]).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(PairwiseForces, MomentumBalance) {
  std::vector<Vec2> x{{0.1, 0.1}, {0.15, 0.12}, {0.5, 0.4}, {0.52, 0.45}};
  const auto f = pairwise_human_forces(x, {});
  Vec2 sum = Vec2::Zero();
  for (const auto& v : f) sum += v;
  EXPECT_LT(sum.norm(), 1e-16);
}

TEST(EnvForce, UniformPart) {
  EnvForceParams p;
  const Vec2 g = uniform_env_force(2.5, p);  // sin(pi/2) = 1
  EXPECT_NEAR(g.x(), -0.01, 1e-15);
  EXPECT_NEAR(g.y(), -0.01, 1e-15);
  EXPECT_EQ(uniform_env_force(0.0, p), Vec2::Zero());
}

TEST(EnvForce, ObstacleRepulsionProfile) {
  EnvForceParams p;
  const std::vector<Vec2> centers{{0.5, 0.5}};
  // inside the radius: c / d^2 pointing away
  const Vec2 g = obstacle_env_force({0.52, 0.5}, centers, p);
  EXPECT_NEAR(g.x(), 0.0005 / (0.02 * 0.02), 1e-12);
  EXPECT_NEAR(g.y(), 0.0, 1e-15);
  // clamp below 0.005
  EXPECT_NEAR(obstacle_env_force({0.501, 0.5}, centers, p).x(), 0.0005 / (0.005 * 0.005), 1e-9);
  // outside the radius
  EXPECT_EQ(obstacle_env_force({0.6, 0.5}, centers, p), Vec2::Zero());
  // regime none ignores obstacles
  EXPECT_EQ(env_force({0.52, 0.5}, 0.0, centers, p, ObstacleRegime::kNone), Vec2::Zero());
}

TEST(NavigationKernel, ValuesAndSupport) {
  NavigationKernelParams p;
  EXPECT_DOUBLE_EQ(navigation_kernel(Vec2::Zero(), p), 0.05);
  EXPECT_NEAR(navigation_kernel({0.1, 0.0}, p), 0.05 * std::exp(-0.01 / 0.03), 1e-15);
  EXPECT_EQ(navigation_kernel({0.15, 0.0}, p), 0.0);
  EXPECT_EQ(navigation_kernel({0.12, 0.1}, p), 0.0);
}

TEST(NavigationKernel, GradientMatchesFiniteDifferences) {
  NavigationKernelParams p;
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(-0.14, 0.14);
  int checked = 0;
  while (checked < 100) {
    const Vec2 x(u(gen), u(gen));
    if (x.norm() > 0.149) continue;
    const Vec2 fd = numeric_gradient([&](const Vec2& y) { return navigation_kernel(y, p); }, x);
    EXPECT_LE((fd - kernel_gradient(x, p)).cwiseAbs().maxCoeff(), 1e-8);
    ++checked;
  }
}

TEST(NavigationForce, SingleRobotDirection) {
  RobotTeamState robots;
  robots.positions = {{0.5, 0.5}};
  robots.velocities = {Vec2::Zero()};
  robots.directions = {0.0};
  robots.masses = {1.0};
  NavigationKernelParams p;
  const Vec2 f = navigation_force({0.5, 0.5}, robots, p);
  EXPECT_NEAR(f.x(), 0.05, 1e-15);
  EXPECT_NEAR(f.y(), 0.0, 1e-15);
  EXPECT_EQ(navigation_force({0.8, 0.5}, robots, p), Vec2::Zero());
  const VectorField field = navigation_force_field(robots, Domain{}, p);
  EXPECT_LE(field.magnitude().values().maxCoeff(), 0.05 + 1e-15);
}

TEST(ForceJacobians, MatchFiniteDifferences) {
  NavigationKernelParams p;
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(0.3, 0.7), a(0.0, 2 * std::numbers::pi);
  int checked = 0;
  while (checked < 100) {
    const Vec2 r(u(gen), u(gen));
    const Vec2 x = r + Vec2(u(gen) - 0.5, u(gen) - 0.5) * 0.25;
    if ((x - r).norm() > 0.148) continue;
    const double th = a(gen);
    const auto field = [&](const Vec2& rr, double t) -> Vec2 { return navigation_kernel(x - rr, p) * direction_vector(t); };
    const auto j = force_jacobians(x, r, th, p);
    const double h = 1e-6;
    const Vec2 dth = (field(r, th + h) - field(r, th - h)) / (2 * h);
    EXPECT_LE((dth - j.wrt_angle).cwiseAbs().maxCoeff(), 1e-8);
    // wrt_offset is d/d(x - r): moving the robot by +h moves the offset by -h
    for (int axis = 0; axis < 2; ++axis) {
      Vec2 e = Vec2::Zero();
      e(axis) = h;
      const Vec2 col = -(field(r + e, th) - field(r - e, th)) / (2 * h);
      EXPECT_LE((col - j.wrt_offset.col(axis)).cwiseAbs().maxCoeff(), 1e-8);
    }
    ++checked;
  }
}
