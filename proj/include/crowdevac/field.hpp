#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "crowdevac/domain.hpp"
#include "crowdevac/errors.hpp"

namespace crowdevac {

using Grid = Eigen::ArrayXXd;  // (i, j) = (x index, y index), column-major

/// Scalar function sampled at the nodes of a Domain grid.
class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(const Domain& domain, double fill = 0.0)
      : domain_(domain), values_(Grid::Constant(domain.resolution, domain.resolution, fill)) {}
  ScalarField(const Domain& domain, Grid values) : domain_(domain), values_(std::move(values)) {
    if (values_.rows() != domain.resolution || values_.cols() != domain.resolution) {
      throw DimensionMismatch("scalar field values do not match the domain resolution");
    }
  }

  template <typename Fn>
  static ScalarField from_function(const Domain& domain, Fn&& fn) {
    ScalarField f(domain);
    for (int j = 0; j < domain.resolution; ++j)
      for (int i = 0; i < domain.resolution; ++i) f.values_(i, j) = fn(domain.node(i, j));
    return f;
  }

  const Domain& domain() const { return domain_; }
  int size() const { return domain_.resolution; }
  const Grid& values() const { return values_; }
  Grid& values() { return values_; }
  double operator()(int i, int j) const { return values_(i, j); }
  double& operator()(int i, int j) { return values_(i, j); }

  bool all_finite() const { return values_.isFinite().all(); }

  ScalarField& operator+=(const ScalarField& o) { check_same(o); values_ += o.values_; return *this; }
  ScalarField& operator-=(const ScalarField& o) { check_same(o); values_ -= o.values_; return *this; }
  ScalarField& operator*=(double s) { values_ *= s; return *this; }

  friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
  friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
  friend ScalarField operator*(ScalarField a, double s) { return a *= s; }
  friend ScalarField operator*(double s, ScalarField a) { return a *= s; }

  void check_same(const ScalarField& o) const {
    if (!(domain_ == o.domain_)) throw DimensionMismatch("scalar fields live on different grids");
  }

 private:
  Domain domain_;
  Grid values_;
};

/// Two-component vector field on a Domain grid.
class VectorField {
 public:
  VectorField() = default;
  explicit VectorField(const Domain& domain, const Vec2& fill = Vec2::Zero())
      : domain_(domain),
        x_(Grid::Constant(domain.resolution, domain.resolution, fill.x())),
        y_(Grid::Constant(domain.resolution, domain.resolution, fill.y())) {}
  VectorField(const Domain& domain, Grid x, Grid y)
      : domain_(domain), x_(std::move(x)), y_(std::move(y)) {
    const int r = domain.resolution;
    if (x_.rows() != r || x_.cols() != r || y_.rows() != r || y_.cols() != r) {
      throw DimensionMismatch("vector field values do not match the domain resolution");
    }
  }

  template <typename Fn>
  static VectorField from_function(const Domain& domain, Fn&& fn) {
    VectorField f(domain);
    for (int j = 0; j < domain.resolution; ++j)
      for (int i = 0; i < domain.resolution; ++i) f.set(i, j, fn(domain.node(i, j)));
    return f;
  }

  const Domain& domain() const { return domain_; }
  int size() const { return domain_.resolution; }
  const Grid& x() const { return x_; }
  const Grid& y() const { return y_; }
  Grid& x() { return x_; }
  Grid& y() { return y_; }

  Vec2 at(int i, int j) const { return {x_(i, j), y_(i, j)}; }
  void set(int i, int j, const Vec2& v) {
    x_(i, j) = v.x();
    y_(i, j) = v.y();
  }

  /// Node-wise Euclidean norm.
  ScalarField magnitude() const { return ScalarField(domain_, (x_.square() + y_.square()).sqrt()); }

  bool all_finite() const { return x_.isFinite().all() && y_.isFinite().all(); }

  VectorField& operator+=(const VectorField& o) { check_same(o); x_ += o.x_; y_ += o.y_; return *this; }
  VectorField& operator-=(const VectorField& o) { check_same(o); x_ -= o.x_; y_ -= o.y_; return *this; }
  VectorField& operator*=(double s) { x_ *= s; y_ *= s; return *this; }

  friend VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
  friend VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }
  friend VectorField operator*(VectorField a, double s) { return a *= s; }
  friend VectorField operator*(double s, VectorField a) { return a *= s; }

  /// Scales each node vector by the scalar field value at that node.
  friend VectorField operator*(const ScalarField& s, VectorField v) {
    if (!(s.domain() == v.domain_)) throw DimensionMismatch("fields live on different grids");
    v.x_ *= s.values();
    v.y_ *= s.values();
    return v;
  }

  void check_same(const VectorField& o) const {
    if (!(domain_ == o.domain_)) throw DimensionMismatch("vector fields live on different grids");
  }

 private:
  Domain domain_;
  Grid x_;
  Grid y_;
};

namespace detail {

// d/dx along the first grid index: central differences inside, one-sided
// first-order differences on the two boundary rows.
inline Grid diff_x(const Grid& f, double h) {
  const Eigen::Index n = f.rows();
  Grid d(f.rows(), f.cols());
  d.middleRows(1, n - 2) = (f.bottomRows(n - 2) - f.topRows(n - 2)) / (2.0 * h);
  d.row(0) = (f.row(1) - f.row(0)) / h;
  d.row(n - 1) = (f.row(n - 1) - f.row(n - 2)) / h;
  return d;
}

inline Grid diff_y(const Grid& f, double h) {
  const Eigen::Index n = f.cols();
  Grid d(f.rows(), f.cols());
  d.middleCols(1, n - 2) = (f.rightCols(n - 2) - f.leftCols(n - 2)) / (2.0 * h);
  d.col(0) = (f.col(1) - f.col(0)) / h;
  d.col(n - 1) = (f.col(n - 1) - f.col(n - 2)) / h;
  return d;
}

}  // namespace detail

inline VectorField gradient(const ScalarField& f) {
  const Domain& d = f.domain();
  return VectorField(d, detail::diff_x(f.values(), d.spacing_x()),
                     detail::diff_y(f.values(), d.spacing_y()));
}

inline ScalarField divergence(const VectorField& v) {
  const Domain& d = v.domain();
  return ScalarField(d, detail::diff_x(v.x(), d.spacing_x()) + detail::diff_y(v.y(), d.spacing_y()));
}

/// (u . grad) u, each component differentiated with the gradient stencil.
inline VectorField advection(const VectorField& u) {
  const Domain& d = u.domain();
  const double hx = d.spacing_x();
  const double hy = d.spacing_y();
  Grid ax = u.x() * detail::diff_x(u.x(), hx) + u.y() * detail::diff_y(u.x(), hy);
  Grid ay = u.x() * detail::diff_x(u.y(), hx) + u.y() * detail::diff_y(u.y(), hy);
  return VectorField(d, std::move(ax), std::move(ay));
}

/// Offset kernel tabulated once per grid: entry (a, b) holds
/// kernel(offset) * cell_area for node offset (a - (R-1), b - (R-1)).
class OffsetKernelTable {
 public:
  template <typename Kernel>
  OffsetKernelTable(const Domain& domain, Kernel&& kernel) : domain_(domain) {
    const int r = domain.resolution;
    const int width = 2 * r - 1;
    const double area = domain.cell_area();
    kx_.resize(width, width);
    ky_.resize(width, width);
    for (int b = 0; b < width; ++b) {
      for (int a = 0; a < width; ++a) {
        const Vec2 offset((a - (r - 1)) * domain.spacing_x(), (b - (r - 1)) * domain.spacing_y());
        const Vec2 k = kernel(offset) * area;
        kx_(a, b) = k.x();
        ky_(a, b) = k.y();
      }
    }
  }

  const Domain& domain() const { return domain_; }

  /// out(x) = sum_y kernel(x - y) * rho(y) * cell_area.
  VectorField apply(const ScalarField& rho) const {
    if (!(rho.domain() == domain_)) throw DimensionMismatch("convolution grid mismatch");
    const int r = domain_.resolution;
    Grid ox = Grid::Zero(r, r);
    Grid oy = Grid::Zero(r, r);
    const Grid& src = rho.values();
    for (int q = 0; q < r; ++q) {
      for (int p = 0; p < r; ++p) {
        const double mass = src(p, q);
        if (mass == 0.0) continue;
        // x - y offset index for target node (i, j): (i - p + r - 1, j - q + r - 1)
        ox += mass * kx_.block(r - 1 - p, r - 1 - q, r, r);
        oy += mass * ky_.block(r - 1 - p, r - 1 - q, r, r);
      }
    }
    return VectorField(domain_, std::move(ox), std::move(oy));
  }

 private:
  Domain domain_;
  Grid kx_;
  Grid ky_;
};

/// Direct quadrature of grad_kernel * rho over the whole grid.
template <typename GradKernel>
VectorField interaction_convolution(const ScalarField& rho, GradKernel&& grad_kernel) {
  return OffsetKernelTable(rho.domain(), std::forward<GradKernel>(grad_kernel)).apply(rho);
}

// Quadrature is plain node summation, value * cell_area; on a grid of
// R nodes per unit side the constant 1 integrates to (R / (R - 1))^2.
inline double integrate(const ScalarField& f) { return f.values().sum() * f.domain().cell_area(); }

inline double l2_norm(const ScalarField& f) {
  return std::sqrt(f.values().square().sum() * f.domain().cell_area());
}

inline double l2_norm(const VectorField& v) {
  return std::sqrt((v.x().square().sum() + v.y().square().sum()) * v.domain().cell_area());
}

inline double dot_integral(const VectorField& a, const VectorField& b) {
  a.check_same(b);
  return ((a.x() * b.x()).sum() + (a.y() * b.y()).sum()) * a.domain().cell_area();
}

/// Weight-space integral of a vector field against a shared feature basis.
/// `features` has one row per node (column-major node order) and one column
/// per basis function; the result stacks the x block then the y block.
inline Eigen::VectorXd integrate_weighted(const Eigen::MatrixXd& features, const VectorField& v) {
  const Eigen::Index nodes = static_cast<Eigen::Index>(v.size()) * v.size();
  if (features.rows() != nodes) {
    throw DimensionMismatch("feature matrix rows do not match the grid node count");
  }
  const double area = v.domain().cell_area();
  const Eigen::Index m = features.cols();
  Eigen::VectorXd out(2 * m);
  const Eigen::Map<const Eigen::VectorXd> vx(v.x().data(), nodes);
  const Eigen::Map<const Eigen::VectorXd> vy(v.y().data(), nodes);
  out.head(m).noalias() = features.transpose() * vx * area;
  out.tail(m).noalias() = features.transpose() * vy * area;
  return out;
}

namespace detail {

struct BilinearStencil {
  int i0, j0;
  double tx, ty;
};

// Points outside the domain are clamped to its boundary first.
inline BilinearStencil locate(const Domain& d, const Vec2& p) {
  const Vec2 q = d.clamp(p);
  const int last = d.resolution - 1;
  const double gx = (q.x() - d.lower.x()) / d.spacing_x();
  const double gy = (q.y() - d.lower.y()) / d.spacing_y();
  const int i0 = std::clamp(static_cast<int>(std::floor(gx)), 0, last - 1);
  const int j0 = std::clamp(static_cast<int>(std::floor(gy)), 0, last - 1);
  return {i0, j0, gx - i0, gy - j0};
}

inline double bilinear(const Grid& g, const BilinearStencil& s) {
  return (1 - s.tx) * (1 - s.ty) * g(s.i0, s.j0) + s.tx * (1 - s.ty) * g(s.i0 + 1, s.j0) +
         (1 - s.tx) * s.ty * g(s.i0, s.j0 + 1) + s.tx * s.ty * g(s.i0 + 1, s.j0 + 1);
}

}  // namespace detail

inline double sample(const ScalarField& f, const Vec2& p) {
  return detail::bilinear(f.values(), detail::locate(f.domain(), p));
}

inline Vec2 sample(const VectorField& v, const Vec2& p) {
  const auto s = detail::locate(v.domain(), p);
  return {detail::bilinear(v.x(), s), detail::bilinear(v.y(), s)};
}

/// Backward difference (curr - prev) / dt; zero when there is no previous field.
template <typename Field>
Field time_derivative(const std::optional<Field>& prev, const Field& curr, double dt) {
  if (!(dt > 0.0)) throw InvalidConfig("time step must be positive");
  if (!prev) return curr * 0.0;
  if (!(prev->domain() == curr.domain())) throw DimensionMismatch("time derivative grid mismatch");
  return (curr - *prev) * (1.0 / dt);
}

}  // namespace crowdevac
