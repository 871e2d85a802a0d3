#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "crowdevac/simulator.hpp"

using namespace crowdevac;

namespace {

SimConfig small_config() {
  SimConfig c;
  c.humans = 40;
  c.robots = 4;
  c.horizon = 2.0;
  return c;
}

SimConfig free_flight() {
  SimConfig c = small_config();
  c.physics = {false, false, false, false, false};
  return c;
}

}  // namespace

TEST(EvacuationRate, Counting) {
  HumanCrowdState crowd;
  const Vec2 safe(0.75, 0.5);
  crowd.positions = {safe, safe + Vec2(0.1, 0), safe + Vec2(0, 0.25), safe + Vec2(0, -0.3)};
  crowd.velocities.assign(4, Vec2::Zero());
  EXPECT_DOUBLE_EQ(evacuation_rate(crowd, safe, 0.25), 75.0);  // boundary point counts
  crowd.positions.assign(4, safe);
  EXPECT_DOUBLE_EQ(evacuation_rate(crowd, safe, 0.15), 100.0);
  EXPECT_THROW(evacuation_rate(crowd, safe, 0.0), InvalidConfig);
}

TEST(Coverage, Basics) {
  const Domain d;
  EXPECT_EQ(coverage_fraction({}, d, 0.15), 0.0);
  const std::vector<Vec2> center{{0.5, 0.5}};
  EXPECT_EQ(coverage_fraction(center, d, std::sqrt(0.5) + 1e-12), 1.0);
  // disjoint disks: bounded by their area plus quantization slack
  const std::vector<Vec2> two{{0.25, 0.25}, {0.75, 0.75}};
  const double bound = 2 * std::numbers::pi * 0.1 * 0.1;
  EXPECT_LE(coverage_fraction(two, d, 0.1), bound + 4 * 2 * std::numbers::pi * 0.1 / 29.0);
  EXPECT_GT(coverage_fraction(two, d, 0.1), 0.0);
}

TEST(Projection, ClampsAndZeroesOutwardVelocity) {
  std::vector<Vec2> x{{1.02, 0.5}, {0.3, -0.1}}, v{{0.4, 0.1}, {0.2, 0.3}};
  project_to_domain(x, v, Domain{});
  EXPECT_EQ(x[0], Vec2(1.0, 0.5));
  EXPECT_EQ(v[0], Vec2(0.0, 0.1));
  EXPECT_EQ(x[1], Vec2(0.3, 0.0));
  EXPECT_EQ(v[1], Vec2(0.2, 0.3));  // already moving inward
}

TEST(Step, FreeFlightAdvancesByVelocity) {
  const Simulator sim(free_flight());
  SimState s = sim.initial_state();
  for (auto& x : s.humans.positions) x = Vec2(0.5, 0.5);
  for (auto& v : s.humans.velocities) v = Vec2(0.01, -0.02);
  sim.step(s);
  for (const auto& x : s.humans.positions) {
    EXPECT_NEAR(x.x(), 0.501, 1e-15);
    EXPECT_NEAR(x.y(), 0.498, 1e-15);
  }
  EXPECT_EQ(s.iteration, 1u);
  EXPECT_DOUBLE_EQ(s.time, 0.1);
}

TEST(Step, FreeFlightConservesKineticEnergy) {
  const Simulator sim(free_flight());
  SimState s = sim.initial_state();
  for (std::size_t j = 0; j < s.humans.size(); ++j) {
    s.humans.positions[j] = Vec2(0.3 + 0.01 * (j % 10), 0.3 + 0.01 * (j / 10));
    s.humans.velocities[j] = Vec2(0.01 * std::sin(j), 0.01 * std::cos(j));
  }
  auto energy = [&] {
    double e = 0;
    for (const auto& v : s.humans.velocities) e += 0.5 * v.squaredNorm();
    return e;
  };
  const double e0 = energy();
  for (int k = 0; k < 10; ++k) sim.step(s);
  EXPECT_EQ(energy(), e0);
}

TEST(Step, BoundaryProjectionForHumans) {
  const Simulator sim(free_flight());
  SimState s = sim.initial_state();
  s.humans.positions[0] = Vec2(0.999, 0.5);
  s.humans.velocities[0] = Vec2(0.5, 0.0);
  sim.step(s);
  EXPECT_EQ(s.humans.positions[0].x(), 1.0);
  EXPECT_EQ(s.humans.velocities[0].x(), 0.0);
}

TEST(Step, StatesStayInsideAndCachesRefresh) {
  SimConfig c = small_config();
  c.regime = ObstacleRegime::kDynamic;
  const Simulator sim(c);
  SimState s = sim.initial_state();
  for (int k = 0; k < 10; ++k) {
    sim.step(s);
    ASSERT_TRUE(s.cache.has_value());
    for (const auto& x : s.humans.positions) ASSERT_TRUE(c.domain.contains(x));
    for (const auto& x : s.robots.positions) ASSERT_TRUE(c.domain.contains(x));
    for (std::size_t m = 0; m < s.obstacles.obstacles.size(); ++m) {
      ASSERT_EQ(s.obstacles.centers[m], s.obstacles.obstacles[m].center_at(s.time));
    }
  }
}

TEST(Step, EvaluateIsPure) {
  const Simulator sim(small_config());
  SimState s = sim.initial_state();
  sim.step(s);
  const auto a = sim.evaluate(s);
  const auto b = sim.evaluate(s);
  EXPECT_EQ(a.direction_rates, b.direction_rates);
  EXPECT_EQ(a.accelerations, b.accelerations);
}

TEST(Run, RowCountAndFiniteness) {
  SimConfig c = small_config();
  c.horizon = 1.05;  // ceil(10.5) = 11 iterations
  const RunMetrics m = run(c);
  ASSERT_EQ(m.rows.size(), 12u);
  EXPECT_DOUBLE_EQ(m.rows.back().time, 1.1);
  for (const auto& r : m.rows) {
    EXPECT_TRUE(std::isfinite(r.density_error) && std::isfinite(r.lyapunov));
    EXPECT_GE(r.evacuation_rate, 0.0);
    EXPECT_LE(r.evacuation_rate, 100.0);
    EXPECT_NEAR(r.lyapunov, 0.5 * (r.density_error * r.density_error + r.velocity_error * r.velocity_error +
                                   r.force_error * r.force_error), 1e-12);
  }
}

TEST(Run, ZeroHorizonGivesInitialRowOnly) {
  SimConfig c = small_config();
  c.horizon = 0.0;
  EXPECT_EQ(run(c).rows.size(), 1u);
}

TEST(Run, InfiniteThresholdStopsImmediately) {
  SimConfig c = small_config();
  c.stop_threshold = std::numeric_limits<double>::infinity();
  const RunMetrics m = run(c);
  EXPECT_EQ(m.rows.size(), 1u);
  EXPECT_EQ(m.rows[0].time, 0.0);
}

TEST(Run, Deterministic) {
  SimConfig c = small_config();
  c.regime = ObstacleRegime::kStatic;
  const RunMetrics a = run(c);
  const RunMetrics b = run(c);
  EXPECT_EQ(a.rows, b.rows);
  EXPECT_EQ(a.final_humans.positions, b.final_humans.positions);
  c.seed = 2;
  EXPECT_NE(run(c).rows, a.rows);
}

TEST(Run, RobotTraceThinning) {
  const RunMetrics m = Simulator(small_config()).run({}, 5);
  ASSERT_EQ(m.robot_trace.size(), 5u);  // iterations 0, 5, 10, 15, 20
  EXPECT_EQ(m.robot_trace[2].iteration, 10u);
  EXPECT_EQ(m.robot_trace[2].positions.size(), 4u);
}

TEST(Run, DivergenceIsReported) {
  SimConfig c = small_config();
  c.env.uniform_amplitude = std::numeric_limits<double>::infinity();
  try {
    run(c);
    FAIL() << "expected divergence";
  } catch (const SimulationDiverged& e) {
    EXPECT_EQ(e.kind(), "simulation-diverged");
  }
}

TEST(Config, ValidationErrors) {
  SimConfig c;
  c.dt = 0.0;
  EXPECT_THROW(Simulator{c}, InvalidConfig);
  c = SimConfig{};
  c.target.safe_location = Vec2(2.0, 0.5);
  EXPECT_THROW(c.validate(), InvalidConfig);
}
