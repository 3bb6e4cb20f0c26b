#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <type_traits>
#include <sstream>
#include <vector>

#include "geoflow/manifold.hpp"

namespace geoflow {

/// Members of a point cloud within geodesic radius h of a center, with
/// kernel weights normalized to sum one.
template <typename Scalar>
struct Neighborhood {
  ManifoldPoint<Scalar> center;
  Scalar radius_h;
  std::vector<std::size_t> member_indices;
  std::vector<Scalar> weights;

  std::size_t size() const noexcept { return member_indices.size(); }
};

/// Truncated Gaussian kernel: K(u) = exp(-u^2/2) for u <= 1, else 0. The
/// hard cutoff keeps kernel support and neighborhood membership consistent.
template <typename Scalar>
Scalar kernel_weight(Scalar d, Scalar h) {
  const Scalar u = d / h;
  if (u > Scalar(1)) return Scalar(0);
  return std::exp(-u * u / Scalar(2));
}

template <typename Scalar>
Neighborhood<Scalar> find_neighborhood(
    const Manifold<Scalar>& m, std::type_identity_t<std::span<const ManifoldPoint<Scalar>>> cloud,
    const ManifoldPoint<Scalar>& center, Scalar h) {
  if (!(h > Scalar(0))) {
    throw std::invalid_argument("find_neighborhood: h must be positive");
  }
  Neighborhood<Scalar> nb{center, h, {}, {}};
  Scalar weight_sum = Scalar(0);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Scalar d = m.geodesic_distance(center, cloud[i]);
    if (d <= h) {
      nb.member_indices.push_back(i);
      const Scalar w = kernel_weight(d, h);
      nb.weights.push_back(w);
      weight_sum += w;
    }
  }
  if (nb.member_indices.empty()) {
    throw EmptyNeighborhoodError(
        "find_neighborhood: no cloud point within radius h of the center");
  }
  for (auto& w : nb.weights) w /= weight_sum;
  return nb;
}

/// Kernel-weighted second moment of the logs of the members at the center:
/// symmetric PSD with the center direction in its null space.
template <typename Scalar>
Mat3<Scalar> local_covariance(const Manifold<Scalar>& m,
                              std::type_identity_t<std::span<const ManifoldPoint<Scalar>>> cloud,
                              const Neighborhood<Scalar>& nb) {
  Mat3<Scalar> sigma = Mat3<Scalar>::Zero();
  for (std::size_t k = 0; k < nb.size(); ++k) {
    const Vec3<Scalar> l = m.log_map(nb.center, cloud[nb.member_indices[k]]).vec();
    sigma += nb.weights[k] * (l * l.transpose());
  }
  return sigma;
}

template <typename Scalar>
Mat3<Scalar> local_covariance(const Manifold<Scalar>& m,
                              std::type_identity_t<std::span<const ManifoldPoint<Scalar>>> cloud,
                              const ManifoldPoint<Scalar>& center, Scalar h) {
  return local_covariance(m, cloud, find_neighborhood(m, cloud, center, h));
}

/// Top two eigenpairs of a local covariance restricted to the tangent
/// plane, plus the weighted mean log when computed at neighborhood level.
template <typename Scalar>
struct LocalSpectrum {
  Scalar lambda1;
  Scalar lambda2;
  TangentVector<Scalar> e1;
  TangentVector<Scalar> e2;
  TangentVector<Scalar> mean_log;
};

namespace detail {

// Sign convention for eigenvectors: align with the reference when one is
// given, otherwise make the largest-magnitude coordinate positive.
template <typename Scalar>
Vec3<Scalar> fix_sign(const Vec3<Scalar>& v, const Vec3<Scalar>* reference) {
  if (reference != nullptr && reference->squaredNorm() > Scalar(0)) {
    return (v.dot(*reference) < Scalar(0)) ? Vec3<Scalar>(-v) : v;
  }
  int idx = 0;
  v.cwiseAbs().maxCoeff(&idx);
  return (v[idx] < Scalar(0)) ? Vec3<Scalar>(-v) : v;
}

}  // namespace detail

constexpr double kDefaultEigenGapTol = 1e-6;

/// Eigen-decomposition of a tangential covariance in the tangent plane at
/// `base`. Requires a spectral gap: lambda1 - lambda2 > tol_eig * lambda1.
template <typename Scalar>
LocalSpectrum<Scalar> tangent_pca(const Manifold<Scalar>& m,
                                  const Mat3<Scalar>& sigma,
                                  const ManifoldPoint<Scalar>& base,
                                  const TangentVector<Scalar>* reference = nullptr,
                                  Scalar tol_eig = Scalar(kDefaultEigenGapTol)) {
  const auto basis = m.tangent_basis(base);
  const Vec3<Scalar>& b1 = basis[0].vec();
  const Vec3<Scalar>& b2 = basis[1].vec();
  const Scalar a = b1.dot(sigma * b1);
  const Scalar b = b1.dot(sigma * b2);
  const Scalar c = b2.dot(sigma * b2);

  const Scalar half_tr = (a + c) / Scalar(2);
  const Scalar disc = std::hypot((a - c) / Scalar(2), b);
  const Scalar l1 = half_tr + disc;
  const Scalar l2 = std::max(half_tr - disc, Scalar(0));
  if (!(l1 - l2 > tol_eig * l1)) {
    std::ostringstream msg;
    msg << "tangent_pca: first and second eigenvalues are not distinct"
        << " (lambda1=" << l1 << ", lambda2=" << l2 << ")";
    throw DegenerateSpectrumError(msg.str());
  }

  // In-plane eigenvector for l1; pick the better-conditioned expression.
  Vec2<Scalar> u1;
  if (std::abs(l1 - a) > std::abs(l1 - c)) {
    u1 = Vec2<Scalar>(b, l1 - a);
  } else {
    u1 = Vec2<Scalar>(l1 - c, b);
  }
  if (u1.norm() == Scalar(0)) u1 = Vec2<Scalar>(1, 0);
  u1.normalize();
  const Vec2<Scalar> u2(-u1.y(), u1.x());

  const Vec3<Scalar> ref_vec =
      (reference != nullptr) ? reference->vec() : Vec3<Scalar>::Zero();
  const Vec3<Scalar>* ref_ptr = (reference != nullptr) ? &ref_vec : nullptr;
  const Vec3<Scalar> e1 =
      detail::fix_sign<Scalar>(u1.x() * b1 + u1.y() * b2, ref_ptr);
  const Vec3<Scalar> e2 = detail::fix_sign<Scalar>(u2.x() * b1 + u2.y() * b2, nullptr);

  return LocalSpectrum<Scalar>{l1, l2, TangentVector<Scalar>(base, e1),
                               TangentVector<Scalar>(base, e2),
                               TangentVector<Scalar>::zero(base)};
}

/// Spread ratio sigma = (lambda2/lambda1) * h, the transverse extent of the
/// data tube implied by the local spectrum.
template <typename Scalar>
Scalar local_spread(const LocalSpectrum<Scalar>& spectrum, Scalar h) {
  if (!(spectrum.lambda1 > Scalar(0))) {
    throw DegenerateSpectrumError("local_spread: lambda1 must be positive");
  }
  return spectrum.lambda2 / spectrum.lambda1 * h;
}

/// Covariance, tangent PCA and weighted mean log of a neighborhood in one
/// pass; mean_log is filled, unlike the bare tangent_pca.
template <typename Scalar>
LocalSpectrum<Scalar> analyze_neighborhood(
    const Manifold<Scalar>& m, std::type_identity_t<std::span<const ManifoldPoint<Scalar>>> cloud,
    const Neighborhood<Scalar>& nb,
    const TangentVector<Scalar>* reference = nullptr,
    Scalar tol_eig = Scalar(kDefaultEigenGapTol)) {
  Mat3<Scalar> sigma = Mat3<Scalar>::Zero();
  Vec3<Scalar> mean = Vec3<Scalar>::Zero();
  for (std::size_t k = 0; k < nb.size(); ++k) {
    const Vec3<Scalar> l = m.log_map(nb.center, cloud[nb.member_indices[k]]).vec();
    sigma += nb.weights[k] * (l * l.transpose());
    mean += nb.weights[k] * l;
  }
  LocalSpectrum<Scalar> spec = tangent_pca(m, sigma, nb.center, reference, tol_eig);
  spec.mean_log = TangentVector<Scalar>(nb.center, mean);
  return spec;
}

}  // namespace geoflow
