#pragma once

#include <cmath>
#include <numbers>

#include "crowdevac/domain.hpp"
#include "crowdevac/field.hpp"

namespace crowdevac {

/// Gaussian bump around the safe location, renormalized so that its grid
/// quadrature over the domain is exactly one (the plane Gaussian leaks mass
/// past the domain edges).
inline ScalarField target_density_field(const TargetDensity& target, const Domain& domain) {
  if (!(target.spread > 0.0)) throw InvalidConfig("target spread must be positive");
  const double s2 = target.spread * target.spread;
  ScalarField rho = ScalarField::from_function(domain, [&](const Vec2& x) {
    return std::exp(-(x - target.safe_location).squaredNorm() / (2.0 * s2)) /
           (2.0 * std::numbers::pi * target.spread);
  });
  const double mass = integrate(rho);
  if (!(mass > 0.0)) throw InvalidConfig("target density has no mass on the grid");
  rho *= 1.0 / mass;
  return rho;
}

}  // namespace crowdevac
