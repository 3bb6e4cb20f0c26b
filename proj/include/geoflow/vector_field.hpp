#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <type_traits>
#include <vector>

#include "geoflow/frechet.hpp"
#include "geoflow/local_geometry.hpp"
#include "geoflow/manifold.hpp"

namespace geoflow {

/// Per-sample vector field of a labeled cloud: the softmax-weighted blend of
/// the locally principal directions of every neighborhood holding the sample.
template <typename Scalar>
struct SampleField {
  std::vector<ManifoldPoint<Scalar>> cloud;
  std::vector<TangentVector<Scalar>> per_sample_vectors;  // v(x_j) at x_j
  Scalar locality_h;
  std::vector<ManifoldPoint<Scalar>> local_means;       // c_i
  std::vector<TangentVector<Scalar>> local_principals;  // v_i at x_i
};

namespace detail {

// Flips each sample's principal direction toward the consensus of the
// already-aligned members of its own neighborhood; eigenvectors carry no
// canonical sign and the flows need a coherent orientation.
template <typename Scalar>
void align_signs(const std::vector<Neighborhood<Scalar>>& neighborhoods,
                 std::vector<TangentVector<Scalar>>& vectors) {
  for (std::size_t j = 0; j < vectors.size(); ++j) {
    Vec3<Scalar> consensus = Vec3<Scalar>::Zero();
    for (const std::size_t i : neighborhoods[j].member_indices) {
      if (i < j) consensus += vectors[i].vec();
    }
    if (consensus.squaredNorm() > Scalar(0) &&
        vectors[j].vec().dot(consensus) < Scalar(0)) {
      vectors[j] = -vectors[j];
    }
  }
}

}  // namespace detail

/// First local eigenvector at every sample, sign-aligned across neighbors.
template <typename Scalar>
std::vector<TangentVector<Scalar>> build_eigen_field(
    const Manifold<Scalar>& m, std::type_identity_t<std::span<const ManifoldPoint<Scalar>>> cloud,
    Scalar h) {
  std::vector<Neighborhood<Scalar>> neighborhoods;
  std::vector<TangentVector<Scalar>> field;
  neighborhoods.reserve(cloud.size());
  field.reserve(cloud.size());
  for (std::size_t j = 0; j < cloud.size(); ++j) {
    neighborhoods.push_back(find_neighborhood(m, cloud, cloud[j], h));
    field.push_back(
        analyze_neighborhood(m, cloud, neighborhoods.back()).e1);
  }
  detail::align_signs(neighborhoods, field);
  return field;
}

/// Builds the modified per-sample field: local PCA direction v_i and
/// intrinsic mean c_i per neighborhood, then for every sample the
/// softmax-weighted sum of the v_i over all neighborhoods containing it,
/// projected to the sample's tangent plane.
template <typename Scalar>
SampleField<Scalar> build_modified_field(
    const Manifold<Scalar>& m, std::type_identity_t<std::span<const ManifoldPoint<Scalar>>> cloud,
    Scalar h) {
  SampleField<Scalar> out;
  out.cloud.assign(cloud.begin(), cloud.end());
  out.locality_h = h;

  std::vector<Neighborhood<Scalar>> neighborhoods;
  neighborhoods.reserve(cloud.size());
  out.local_means.reserve(cloud.size());
  out.local_principals.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    neighborhoods.push_back(find_neighborhood(m, cloud, cloud[i], h));
    const auto& nb = neighborhoods.back();
    std::vector<ManifoldPoint<Scalar>> members;
    members.reserve(nb.size());
    for (const std::size_t k : nb.member_indices) members.push_back(cloud[k]);
    out.local_means.push_back(frechet_mean<Scalar>(m, members));
    out.local_principals.push_back(analyze_neighborhood(m, cloud, nb).e1);
  }
  detail::align_signs(neighborhoods, out.local_principals);

  out.per_sample_vectors.reserve(cloud.size());
  for (std::size_t j = 0; j < cloud.size(); ++j) {
    // The neighborhood relation is symmetric, so the index set of
    // neighborhoods holding x_j equals the member list of its own.
    const auto& holders = neighborhoods[j].member_indices;
    std::vector<Scalar> w(holders.size());
    Scalar w_sum = Scalar(0);
    for (std::size_t k = 0; k < holders.size(); ++k) {
      w[k] = std::exp(-m.geodesic_distance(cloud[j], out.local_means[holders[k]]));
      w_sum += w[k];
    }
    Vec3<Scalar> sum = Vec3<Scalar>::Zero();
    for (std::size_t k = 0; k < holders.size(); ++k) {
      sum += (w[k] / w_sum) * out.local_principals[holders[k]].vec();
    }
    out.per_sample_vectors.push_back(m.project_to_tangent(cloud[j], sum));
  }
  return out;
}

/// Evaluates the field at an arbitrary point: per-sample vectors over the
/// neighborhood of q are transported to q, optionally sign-aligned to a
/// reference direction, summed, projected and normalized to unit length.
template <typename Scalar>
TangentVector<Scalar> field_at(const Manifold<Scalar>& m,
                               const ManifoldPoint<Scalar>& q,
                               const SampleField<Scalar>& field,
                               const TangentVector<Scalar>* reference = nullptr) {
  Vec3<Scalar> sum = Vec3<Scalar>::Zero();
  std::size_t members = 0;
  for (std::size_t j = 0; j < field.cloud.size(); ++j) {
    if (m.geodesic_distance(q, field.cloud[j]) > field.locality_h) continue;
    ++members;
    Vec3<Scalar> v = m.parallel_transport(field.per_sample_vectors[j], q).vec();
    if (reference != nullptr && v.dot(reference->vec()) < Scalar(0)) v = -v;
    sum += v;
  }
  if (members == 0) {
    throw EmptyNeighborhoodError(
        "field_at: no sample within locality_h of the query point");
  }
  TangentVector<Scalar> t = m.project_to_tangent(q, sum);
  if (t.norm() < Scalar(1e-12)) {
    throw DegenerateSpectrumError(
        "field_at: aggregated field vanishes at the query point");
  }
  return t.normalized();
}

}  // namespace geoflow
