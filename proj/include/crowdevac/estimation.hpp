#pragma once

#include <Eigen/Core>

#include <cmath>
#include <numbers>
#include <span>

#include "crowdevac/domain.hpp"
#include "crowdevac/field.hpp"

namespace crowdevac {

/// Gaussian kernel density estimate settings, H(x) = exp(-|x|^2 / 2) / 2pi.
struct KdeConfig {
  double bandwidth = 0.07;

  void validate() const {
    if (!(bandwidth > 0.0)) throw InvalidConfig("KDE bandwidth must be positive");
  }

  bool operator==(const KdeConfig&) const = default;
};

struct VelocityEstimatorConfig {
  double bandwidth = 0.07;
  double min_weight = 1e-12;  // below this total kernel weight a node gets zero

  void validate() const {
    if (!(bandwidth > 0.0)) throw InvalidConfig("velocity estimator bandwidth must be positive");
  }

  bool operator==(const VelocityEstimatorConfig&) const = default;
};

namespace detail {

// The isotropic Gaussian factorizes over the axes, so each sample
// contributes an outer product of two 1-D profiles to the grid.
inline Eigen::VectorXd gaussian_profile(double center, double lower, double spacing, int count,
                                        double bandwidth) {
  Eigen::VectorXd out(count);
  const double inv = 1.0 / (2.0 * bandwidth * bandwidth);
  for (int i = 0; i < count; ++i) {
    const double d = lower + i * spacing - center;
    out(i) = std::exp(-d * d * inv);
  }
  return out;
}

}  // namespace detail

/// Raw estimate (1 / N h^2) sum_j H((x - X_j) / h) at every node, without
/// renormalization over the domain.
inline ScalarField kde_density_raw(std::span<const Vec2> positions, const KdeConfig& cfg,
                                   const Domain& domain) {
  if (positions.empty()) throw EstimationError("density estimate needs at least one sample");
  const int r = domain.resolution;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(r, r);
  for (const Vec2& p : positions) {
    const auto ex = detail::gaussian_profile(p.x(), domain.lower.x(), domain.spacing_x(), r,
                                             cfg.bandwidth);
    const auto ey = detail::gaussian_profile(p.y(), domain.lower.y(), domain.spacing_y(), r,
                                             cfg.bandwidth);
    acc.noalias() += ex * ey.transpose();
  }
  const double h2 = cfg.bandwidth * cfg.bandwidth;
  acc *= 1.0 / (2.0 * std::numbers::pi * h2 * static_cast<double>(positions.size()));
  return ScalarField(domain, acc.array());
}

/// Kernel density estimate renormalized to unit grid integral over the
/// domain, matching the normalization of the target density.
inline ScalarField kde_density(std::span<const Vec2> positions, const KdeConfig& cfg,
                               const Domain& domain) {
  ScalarField rho = kde_density_raw(positions, cfg, domain);
  const double mass = integrate(rho);
  if (!(mass > 0.0)) {
    throw EstimationError("density estimate has no mass on the grid (bandwidth too small?)");
  }
  rho *= 1.0 / mass;
  return rho;
}

/// Nadaraya-Watson regression of the sample velocities onto the grid with
/// the KDE Gaussian. Nodes with negligible total weight get zero velocity.
inline VectorField velocity_field_estimate(std::span<const Vec2> positions,
                                           std::span<const Vec2> velocities,
                                           const VelocityEstimatorConfig& cfg,
                                           const Domain& domain) {
  if (positions.size() != velocities.size()) {
    throw DimensionMismatch("positions and velocities differ in length");
  }
  if (positions.empty()) throw EstimationError("velocity estimate needs at least one sample");
  const int r = domain.resolution;
  Eigen::MatrixXd weight = Eigen::MatrixXd::Zero(r, r);
  Eigen::MatrixXd mx = Eigen::MatrixXd::Zero(r, r);
  Eigen::MatrixXd my = Eigen::MatrixXd::Zero(r, r);
  for (std::size_t j = 0; j < positions.size(); ++j) {
    const auto ex = detail::gaussian_profile(positions[j].x(), domain.lower.x(),
                                             domain.spacing_x(), r, cfg.bandwidth);
    const auto ey = detail::gaussian_profile(positions[j].y(), domain.lower.y(),
                                             domain.spacing_y(), r, cfg.bandwidth);
    const Eigen::MatrixXd w = ex * ey.transpose();
    weight += w;
    mx += velocities[j].x() * w;
    my += velocities[j].y() * w;
  }
  // The 1/(2 pi h^2) prefactor cancels in the ratio but sets the scale of
  // the emptiness test, so apply it to the weights only.
  const double norm = 1.0 / (2.0 * std::numbers::pi * cfg.bandwidth * cfg.bandwidth);
  Grid ux = Grid::Zero(r, r);
  Grid uy = Grid::Zero(r, r);
  for (int jj = 0; jj < r; ++jj) {
    for (int ii = 0; ii < r; ++ii) {
      const double w = weight(ii, jj);
      if (w * norm < cfg.min_weight) continue;
      ux(ii, jj) = mx(ii, jj) / w;
      uy(ii, jj) = my(ii, jj) / w;
    }
  }
  return VectorField(domain, std::move(ux), std::move(uy));
}

}  // namespace crowdevac
