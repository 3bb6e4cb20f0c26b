#pragma once

#include <span>
#include <type_traits>
#include <vector>

#include "geoflow/manifold.hpp"

namespace geoflow {

/// Intrinsic (Fréchet) mean by fixed-point iteration
/// x <- exp_x(mean of log_x(x_i)). The cloud must sit inside an open
/// hemisphere for the mean to be unique.
template <typename Scalar>
ManifoldPoint<Scalar> frechet_mean(const Manifold<Scalar>& m,
                                   std::type_identity_t<std::span<const ManifoldPoint<Scalar>>> cloud,
                                   Scalar tol = Scalar(1e-10),
                                   int max_iters = 200) {
  if (cloud.empty()) {
    throw std::invalid_argument("frechet_mean: empty cloud");
  }
  Vec3<Scalar> extrinsic = Vec3<Scalar>::Zero();
  for (const auto& p : cloud) extrinsic += p.coords();
  if (extrinsic.norm() < Scalar(1e-9)) {
    throw HemisphereError(
        "frechet_mean: extrinsic mean is near zero; the cloud is not "
        "contained in an open hemisphere");
  }
  ManifoldPoint<Scalar> x{extrinsic};

  for (int it = 0; it < max_iters; ++it) {
    Vec3<Scalar> g = Vec3<Scalar>::Zero();
    for (const auto& p : cloud) g += m.log_map(x, p).vec();
    g /= Scalar(cloud.size());
    const Scalar gn = g.norm();
    if (gn > pi_v<Scalar> / Scalar(2)) {
      throw HemisphereError(
          "frechet_mean: mean-log norm exceeds pi/2; uniqueness is at risk");
    }
    if (gn <= tol) return x;
    x = m.exp_map(x, TangentVector<Scalar>(x, g));
  }
  throw NonConvergenceError("frechet_mean: no convergence within max_iters",
                            0.0);
}

}  // namespace geoflow
