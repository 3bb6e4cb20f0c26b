#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "geoflow/manifold.hpp"

namespace geoflow {

/// An ordered polyline of manifold points with cumulative arc length.
/// Consecutive nodes must be distinct and non-antipodal so that the
/// cumulative length is strictly increasing and segments interpolate.
template <typename Scalar>
class Curve {
 public:
  Curve(const Manifold<Scalar>& m, std::vector<ManifoldPoint<Scalar>> nodes)
      : nodes_(std::move(nodes)) {
    if (nodes_.empty()) {
      throw std::invalid_argument("Curve: needs at least one node");
    }
    cumlen_.reserve(nodes_.size());
    cumlen_.push_back(Scalar(0));
    for (std::size_t i = 1; i < nodes_.size(); ++i) {
      if (nodes_[i - 1].dot(nodes_[i]) <=
          Scalar(-1) + UnitSphere<Scalar>::antipodal_tol()) {
        throw CutLocusError("Curve: consecutive nodes are antipodal");
      }
      const Scalar d = m.geodesic_distance(nodes_[i - 1], nodes_[i]);
      if (!(d > Scalar(0))) {
        throw std::invalid_argument("Curve: consecutive nodes coincide");
      }
      cumlen_.push_back(cumlen_.back() + d);
    }
  }

  std::size_t size() const noexcept { return nodes_.size(); }
  std::size_t segments() const noexcept { return nodes_.size() - 1; }
  const ManifoldPoint<Scalar>& node(std::size_t i) const { return nodes_[i]; }
  const std::vector<ManifoldPoint<Scalar>>& nodes() const noexcept {
    return nodes_;
  }
  Scalar cumulative_length(std::size_t i) const { return cumlen_[i]; }
  const std::vector<Scalar>& cumulative_lengths() const noexcept {
    return cumlen_;
  }
  Scalar total_length() const { return cumlen_.back(); }

  /// Segment index and in-segment fraction for a global arc length s
  /// (clamped to [0, total_length]).
  std::pair<std::size_t, Scalar> locate(Scalar s) const {
    if (nodes_.size() == 1 || s <= Scalar(0)) return {0, Scalar(0)};
    if (s >= total_length()) return {segments() - 1, Scalar(1)};
    std::size_t lo = 0, hi = cumlen_.size() - 1;
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      (cumlen_[mid] <= s ? lo : hi) = mid;
    }
    const Scalar seg_len = cumlen_[lo + 1] - cumlen_[lo];
    return {lo, (s - cumlen_[lo]) / seg_len};
  }

  ManifoldPoint<Scalar> point_at(const Manifold<Scalar>& m, Scalar s) const {
    if (nodes_.size() == 1) return nodes_[0];
    const auto [seg, f] = locate(s);
    return geodesic_point(m, nodes_[seg], nodes_[seg + 1], f);
  }

 private:
  std::vector<ManifoldPoint<Scalar>> nodes_;
  std::vector<Scalar> cumlen_;
};

/// Drops consecutive duplicates (within tol) so the result satisfies the
/// Curve invariants; keeps the first node of each run.
template <typename Scalar>
std::vector<ManifoldPoint<Scalar>> dedup_nodes(
    const Manifold<Scalar>& m, const std::vector<ManifoldPoint<Scalar>>& nodes,
    Scalar tol = Scalar(1e-14)) {
  std::vector<ManifoldPoint<Scalar>> out;
  out.reserve(nodes.size());
  for (const auto& p : nodes) {
    if (out.empty() || m.geodesic_distance(out.back(), p) > tol) {
      out.push_back(p);
    }
  }
  return out;
}

}  // namespace geoflow
