#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "crowdevac/estimation.hpp"

using namespace crowdevac;

namespace {

std::vector<Vec2> random_points(std::size_t n, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vec2> out(n);
  for (auto& p : out) p = Vec2(u(gen), u(gen));
  return out;
}

// Signed area test: is q inside (or on) the convex hull of pts?
bool inside_hull(std::vector<Vec2> pts, const Vec2& q, double tol) {
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  auto cross = [](const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a - o).x() * (b - o).y() - (a - o).y() * (b - o).x();
  };
  std::vector<Vec2> hull;
  for (int pass = 0; pass < 2; ++pass) {
    const std::size_t start = hull.size();
    for (const Vec2& p : pts) {
      while (hull.size() >= start + 2 && cross(hull[hull.size() - 2], hull.back(), p) <= 0) hull.pop_back();
      hull.push_back(p);
    }
    hull.pop_back();
    std::reverse(pts.begin(), pts.end());
  }
  if (hull.size() < 3) {
    // degenerate: distance to the segment
    const Vec2 a = pts.front(), b = pts.back();
    const double len2 = (b - a).squaredNorm();
    const double t = len2 > 0 ? std::clamp((q - a).dot(b - a) / len2, 0.0, 1.0) : 0.0;
    return (a + t * (b - a) - q).norm() <= tol;
  }
  for (std::size_t k = 0; k < hull.size(); ++k) {
    const Vec2& a = hull[k];
    const Vec2& b = hull[(k + 1) % hull.size()];
    if (cross(a, b, q) < -tol * (b - a).norm()) return false;
  }
  return true;
}

}  // namespace

TEST(Kde, UnitIntegralForSeveralSampleCounts) {
  std::mt19937_64 gen(1);
  const Domain d;
  for (std::size_t n : {1u, 10u, 250u}) {
    const ScalarField rho = kde_density(random_points(n, gen), KdeConfig{}, d);
    EXPECT_NEAR(integrate(rho), 1.0, 1e-9) << n;
    EXPECT_GE(rho.values().minCoeff(), 0.0);
  }
}

TEST(Kde, RawMatchesDirectFormula) {
  const Domain d;
  const std::vector<Vec2> x{{0.2, 0.3}, {0.7, 0.6}, {0.71, 0.58}};
  const double h = 0.07;
  const ScalarField raw = kde_density_raw(x, KdeConfig{h}, d);
  for (int j = 0; j < d.resolution; j += 3)
    for (int i = 0; i < d.resolution; i += 3) {
      double acc = 0;
      for (const auto& p : x) {
        const Vec2 z = (d.node(i, j) - p) / h;
        acc += std::exp(-z.squaredNorm() / 2) / (2 * std::numbers::pi);
      }
      acc /= 3 * h * h;
      EXPECT_NEAR(raw(i, j), acc, 1e-12);
    }
}

TEST(Kde, SingleCentralSamplePeaksAtSample) {
  const Domain d;
  const ScalarField rho = kde_density(std::vector<Vec2>{d.node(15, 15)}, KdeConfig{}, d);
  Eigen::Index i, j;
  rho.values().maxCoeff(&i, &j);
  EXPECT_EQ(i, 15);
  EXPECT_EQ(j, 15);
}

TEST(Kde, Errors) {
  EXPECT_THROW(kde_density({}, KdeConfig{}, Domain{}), EstimationError);
  EXPECT_THROW(KdeConfig{0.0}.validate(), InvalidConfig);
  // far-off sample with a tiny bandwidth leaves no mass on the grid
  EXPECT_THROW(kde_density(std::vector<Vec2>{{5.0, 5.0}}, KdeConfig{1e-3}, Domain{}), EstimationError);
}

TEST(VelocityEstimate, ConstantVelocityReproduced) {
  std::mt19937_64 gen(4);
  const auto x = random_points(40, gen);
  const std::vector<Vec2> v(40, Vec2(0.3, -0.1));
  const VectorField u = velocity_field_estimate(x, v, VelocityEstimatorConfig{}, Domain{});
  EXPECT_LT((u.x() - 0.3).abs().maxCoeff(), 1e-12);
  EXPECT_LT((u.y() + 0.1).abs().maxCoeff(), 1e-12);
}

TEST(VelocityEstimate, InsideConvexHullOfSamples) {
  std::mt19937_64 gen(12);
  std::uniform_real_distribution<double> vel(-1.0, 1.0);
  std::uniform_int_distribution<int> count(1, 30);
  const Domain d;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto x = random_points(static_cast<std::size_t>(count(gen)), gen);
    std::vector<Vec2> v(x.size());
    for (auto& w : v) w = Vec2(vel(gen), vel(gen));
    const VectorField u = velocity_field_estimate(x, v, VelocityEstimatorConfig{}, d);
    for (int j = 0; j < d.resolution; ++j)
      for (int i = 0; i < d.resolution; ++i) {
        const Vec2 q = u.at(i, j);
        if (q == Vec2::Zero()) continue;  // empty node fill
        ASSERT_TRUE(inside_hull(v, q, 1e-9)) << "trial " << trial;
      }
  }
}

TEST(VelocityEstimate, EmptyRegionsGetZero) {
  VelocityEstimatorConfig cfg;
  cfg.bandwidth = 0.01;
  const VectorField u = velocity_field_estimate(std::vector<Vec2>{{0.0, 0.0}}, std::vector<Vec2>{{1.0, 1.0}}, cfg, Domain{});
  EXPECT_EQ(u.at(29, 29), Vec2::Zero());
  EXPECT_EQ(u.at(0, 0), Vec2(1.0, 1.0));
}

TEST(VelocityEstimate, LengthMismatch) {
  EXPECT_THROW(velocity_field_estimate(std::vector<Vec2>{{0.1, 0.1}}, std::vector<Vec2>{},
                                       VelocityEstimatorConfig{}, Domain{}),
               DimensionMismatch);
}
