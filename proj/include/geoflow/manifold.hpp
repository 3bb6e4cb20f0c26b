#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <type_traits>
#include <vector>

#include "geoflow/errors.hpp"

namespace geoflow {

template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Mat3 = Eigen::Matrix<Scalar, 3, 3>;
template <typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;

template <typename Scalar>
inline constexpr Scalar pi_v = Scalar(3.14159265358979323846L);

/// A point of the embedded surface. The shipped geometry is the unit
/// two-sphere, so coordinates are renormalized on construction.
template <typename Scalar>
class ManifoldPoint {
 public:
  explicit ManifoldPoint(const Vec3<Scalar>& coords) : coords_(coords) {
    const Scalar n = coords_.norm();
    if (!(n > Scalar(0)) || !std::isfinite(static_cast<double>(n))) {
      throw NormalizationError("cannot normalize a zero or non-finite 3-vector");
    }
    coords_ /= n;
  }
  ManifoldPoint(Scalar x, Scalar y, Scalar z)
      : ManifoldPoint(Vec3<Scalar>(x, y, z)) {}

  const Vec3<Scalar>& coords() const noexcept { return coords_; }
  Scalar dot(const ManifoldPoint& other) const {
    return coords_.dot(other.coords_);
  }

 private:
  Vec3<Scalar> coords_;
};

/// A tangent vector anchored at a base point. The component along the base
/// normal is stripped on construction so the orthogonality invariant holds.
template <typename Scalar>
class TangentVector {
 public:
  TangentVector(const ManifoldPoint<Scalar>& base, const Vec3<Scalar>& vec)
      : base_(base),
        vec_(vec - vec.dot(base.coords()) * base.coords()) {}

  static TangentVector zero(const ManifoldPoint<Scalar>& base) {
    return TangentVector(base, Vec3<Scalar>::Zero());
  }

  const ManifoldPoint<Scalar>& base() const noexcept { return base_; }
  const Vec3<Scalar>& vec() const noexcept { return vec_; }
  Scalar norm() const { return vec_.norm(); }

  TangentVector scaled(Scalar s) const {
    TangentVector out(*this);
    out.vec_ *= s;
    return out;
  }
  TangentVector normalized() const {
    const Scalar n = norm();
    if (!(n > Scalar(0))) {
      throw NormalizationError("cannot normalize a zero tangent vector");
    }
    return scaled(Scalar(1) / n);
  }
  TangentVector operator-() const { return scaled(Scalar(-1)); }

 private:
  ManifoldPoint<Scalar> base_;
  Vec3<Scalar> vec_;
};

template <typename Scalar>
TangentVector<Scalar> operator*(Scalar s, const TangentVector<Scalar>& v) {
  return v.scaled(s);
}

/// A minimizing geodesic between two non-antipodal points.
template <typename Scalar>
struct GeodesicSegment {
  ManifoldPoint<Scalar> start;
  ManifoldPoint<Scalar> end;
  Scalar length;
};

/// Geometry interface. Downstream modules call only this surface, so an
/// implicit F(x)=0 manifold can be slotted in later. The analytic unit
/// sphere is the sole shipped implementation.
template <typename Scalar>
class Manifold {
 public:
  using Point = ManifoldPoint<Scalar>;
  using Tangent = TangentVector<Scalar>;

  virtual ~Manifold() = default;

  /// Geodesic shooting from x with initial velocity v, ‖v‖ < pi.
  virtual Point exp_map(const Point& x, const Tangent& v) const = 0;
  /// Inverse of exp_map; undefined at the cut locus.
  virtual Tangent log_map(const Point& x, const Point& y) const = 0;
  virtual Scalar geodesic_distance(const Point& x, const Point& y) const = 0;
  /// Orthogonal projection of an ambient vector onto the tangent plane at x.
  virtual Tangent project_to_tangent(const Point& x,
                                     const Vec3<Scalar>& w) const = 0;
  /// Exact parallel transport of v from v.base() to `to` along the
  /// connecting geodesic.
  virtual Tangent parallel_transport(const Tangent& v, const Point& to) const = 0;
  /// Deterministic orthonormal basis of the tangent plane at x.
  virtual std::array<Tangent, 2> tangent_basis(const Point& x) const = 0;
  /// Outward unit normal of the embedded surface at x.
  virtual Vec3<Scalar> surface_normal(const Point& x) const = 0;
};

/// Closed-form geometry of S^2 embedded in R^3.
template <typename Scalar>
class UnitSphere final : public Manifold<Scalar> {
 public:
  using Point = ManifoldPoint<Scalar>;
  using Tangent = TangentVector<Scalar>;

  Point exp_map(const Point& x, const Tangent& v) const override {
    const Scalar theta = v.norm();
    if (theta >= pi_v<Scalar>) {
      throw CutLocusError("exp_map: velocity reaches the cut locus (norm >= pi)");
    }
    if (theta == Scalar(0)) return x;
    const Vec3<Scalar> y =
        std::cos(theta) * x.coords() + sinc(theta) * v.vec();
    return Point(y);
  }

  Tangent log_map(const Point& x, const Point& y) const override {
    const Scalar c = clamped_dot(x, y);
    if (c <= Scalar(-1) + antipodal_tol()) {
      throw CutLocusError("log_map: inputs are antipodal within tolerance");
    }
    const Vec3<Scalar> u = y.coords() - c * x.coords();
    const Scalar un = u.norm();
    if (un < Scalar(1e-15)) return Tangent::zero(x);
    const Scalar theta = std::acos(c);
    return Tangent(x, (theta / un) * u);
  }

  Scalar geodesic_distance(const Point& x, const Point& y) const override {
    return std::acos(clamped_dot(x, y));
  }

  Tangent project_to_tangent(const Point& x,
                             const Vec3<Scalar>& w) const override {
    return Tangent(x, w);  // construction strips the normal component
  }

  Tangent parallel_transport(const Tangent& v, const Point& to) const override {
    const Point& x = v.base();
    const Tangent u = log_map(x, to);
    const Scalar theta = u.norm();
    if (theta == Scalar(0)) return Tangent(to, v.vec());
    const Vec3<Scalar> e = u.vec() / theta;
    const Scalar a = v.vec().dot(e);
    // The component perpendicular to the geodesic plane is unchanged; the
    // in-plane component rotates with the geodesic.
    const Vec3<Scalar> keep = v.vec() - a * e;
    const Vec3<Scalar> e_rot =
        -std::sin(theta) * x.coords() + std::cos(theta) * e;
    return Tangent(to, a * e_rot + keep);
  }

  std::array<Tangent, 2> tangent_basis(const Point& x) const override {
    const Vec3<Scalar> b1 = x.coords().unitOrthogonal();
    const Vec3<Scalar> b2 = x.coords().cross(b1);
    return {Tangent(x, b1), Tangent(x, b2)};
  }

  Vec3<Scalar> surface_normal(const Point& x) const override {
    return x.coords();
  }

  static constexpr Scalar antipodal_tol() { return Scalar(1e-9); }

 private:
  static Scalar clamped_dot(const Point& x, const Point& y) {
    return std::clamp(x.dot(y), Scalar(-1), Scalar(1));
  }
  static Scalar sinc(Scalar t) {
    if (std::abs(t) < Scalar(1e-4)) {
      const Scalar t2 = t * t;
      return Scalar(1) - t2 / Scalar(6) + t2 * t2 / Scalar(120);
    }
    return std::sin(t) / t;
  }
};

/// Point at fraction s in [0,1] along the geodesic from x to y.
template <typename Scalar>
ManifoldPoint<Scalar> geodesic_point(const Manifold<Scalar>& m,
                                     const ManifoldPoint<Scalar>& x,
                                     const ManifoldPoint<Scalar>& y, Scalar s) {
  if (s == Scalar(0)) return x;
  if (s == Scalar(1)) return y;
  return m.exp_map(x, m.log_map(x, y).scaled(s));
}

template <typename Scalar>
GeodesicSegment<Scalar> geodesic_segment(const Manifold<Scalar>& m,
                                         const ManifoldPoint<Scalar>& x,
                                         const ManifoldPoint<Scalar>& y) {
  if (x.dot(y) <= Scalar(-1) + UnitSphere<Scalar>::antipodal_tol()) {
    throw CutLocusError("geodesic_segment: endpoints are antipodal");
  }
  return GeodesicSegment<Scalar>{x, y, m.geodesic_distance(x, y)};
}

/// One rung of Schild's ladder: transports v across the geodesic step from
/// v.base() to `next` via a geodesic parallelogram, then restores the norm.
template <typename Scalar>
TangentVector<Scalar> schild_rung(const Manifold<Scalar>& m,
                                  const TangentVector<Scalar>& v,
                                  const ManifoldPoint<Scalar>& next) {
  const Scalar vn = v.norm();
  if (vn == Scalar(0)) return TangentVector<Scalar>::zero(next);
  const ManifoldPoint<Scalar>& x = v.base();
  const Scalar len = m.geodesic_distance(x, next);
  if (len == Scalar(0)) return TangentVector<Scalar>(next, v.vec());
  // The rung rotates the vector by ~ arm*len/2 * curvature, so the arm is
  // kept one order shorter than the rung; the accumulated error is then
  // second order in the rung spacing.
  const Scalar arm = std::max(len * len / Scalar(2), Scalar(1e-9));
  const Scalar sigma = arm / vn;
  const ManifoldPoint<Scalar> tip = m.exp_map(x, v.scaled(sigma));
  const ManifoldPoint<Scalar> mid = geodesic_point(m, tip, next, Scalar(0.5));
  const ManifoldPoint<Scalar> across =
      m.exp_map(x, m.log_map(x, mid).scaled(Scalar(2)));
  TangentVector<Scalar> out = m.log_map(next, across);
  const Scalar on = out.norm();
  if (on == Scalar(0)) return TangentVector<Scalar>::zero(next);
  return out.scaled(vn / on);
}

/// Schild's ladder along a polyline; one rung per consecutive node pair.
/// The caller controls the rung spacing through the path discretization.
template <typename Scalar>
TangentVector<Scalar> parallel_transport_schild(
    const Manifold<Scalar>& m, const TangentVector<Scalar>& v,
    std::type_identity_t<std::span<const ManifoldPoint<Scalar>>> path) {
  if (path.empty()) {
    throw std::invalid_argument("parallel_transport_schild: empty path");
  }
  TangentVector<Scalar> cur(path.front(), v.vec());
  for (std::size_t i = 1; i < path.size(); ++i) {
    cur = schild_rung(m, cur, path[i]);
  }
  return cur;
}

/// Schild's ladder along the geodesic from v.base() to y, subdivided into
/// rungs no longer than max_rung_len.
template <typename Scalar>
TangentVector<Scalar> parallel_transport_schild(
    const Manifold<Scalar>& m, const TangentVector<Scalar>& v,
    const ManifoldPoint<Scalar>& y, Scalar max_rung_len = Scalar(0.01)) {
  const ManifoldPoint<Scalar>& x = v.base();
  const Scalar len = m.geodesic_distance(x, y);
  const int rungs = std::max(1, static_cast<int>(std::ceil(len / max_rung_len)));
  std::vector<ManifoldPoint<Scalar>> path;
  path.reserve(static_cast<std::size_t>(rungs) + 1);
  path.push_back(x);
  for (int k = 1; k < rungs; ++k) {
    path.push_back(geodesic_point(m, x, y, Scalar(k) / Scalar(rungs)));
  }
  path.push_back(y);
  return parallel_transport_schild(m, v, std::span<const ManifoldPoint<Scalar>>(path));
}

}  // namespace geoflow
