#pragma once

#include <algorithm>
#include <optional>
#include <type_traits>
#include <sstream>
#include <span>
#include <utility>
#include <vector>

#include "geoflow/curve.hpp"
#include "geoflow/frechet.hpp"
#include "geoflow/local_geometry.hpp"
#include "geoflow/vector_field.hpp"

namespace geoflow {

/// A traced flow: the polyline, the spread sigma and the travel direction
/// at each node, and the locality parameter the flow was built with.
template <typename Scalar>
struct FlowResult {
  Curve<Scalar> curve;
  std::vector<Scalar> node_spread;
  std::vector<TangentVector<Scalar>> node_direction;
  Scalar locality_h;
};

namespace detail {

template <typename Scalar>
Scalar spread_at(const Manifold<Scalar>& m, const SampleField<Scalar>& field,
                 const ManifoldPoint<Scalar>& q, std::size_t node_index) {
  try {
    const auto nb = find_neighborhood<Scalar>(
        m, std::span<const ManifoldPoint<Scalar>>(field.cloud), q,
        field.locality_h);
    return local_spread(analyze_neighborhood(m, std::span<const ManifoldPoint<Scalar>>(field.cloud), nb),
                        field.locality_h);
  } catch (const DegenerateSpectrumError& e) {
    std::ostringstream msg;
    msg << e.what() << " (flow node " << node_index << ")";
    throw DegenerateSpectrumError(msg.str());
  }
}

}  // namespace detail

/// Follows the field from x0 with initial direction v0 by explicit
/// first-order steps q <- exp_q(step * field_at(q)), recording sigma and
/// the step direction at every node. Stops at max_length or when the data
/// runs out (empty neighborhood).
template <typename Scalar>
FlowResult<Scalar> trace_flow(const Manifold<Scalar>& m,
                              const SampleField<Scalar>& field,
                              const ManifoldPoint<Scalar>& x0,
                              const TangentVector<Scalar>& v0, Scalar step,
                              Scalar max_length) {
  std::vector<ManifoldPoint<Scalar>> nodes;
  std::vector<Scalar> spreads;
  std::vector<TangentVector<Scalar>> directions;

  TangentVector<Scalar> ref = v0.normalized();
  TangentVector<Scalar> dir = field_at(m, x0, field, &ref);
  nodes.push_back(x0);
  spreads.push_back(detail::spread_at(m, field, x0, 0));
  directions.push_back(dir);

  Scalar cum = Scalar(0);
  while (cum + step <= max_length + Scalar(1e-12)) {
    const ManifoldPoint<Scalar> next =
        m.exp_map(nodes.back(), directions.back().scaled(step));
    const TangentVector<Scalar> carried =
        m.parallel_transport(directions.back(), next);
    TangentVector<Scalar> next_dir = carried;
    bool in_data = true;
    try {
      next_dir = field_at(m, next, field, &carried);
    } catch (const EmptyNeighborhoodError&) {
      in_data = false;  // stepped past the data support
    }
    if (!in_data) break;
    nodes.push_back(next);
    spreads.push_back(detail::spread_at(m, field, next, nodes.size() - 1));
    directions.push_back(next_dir);
    cum += step;
  }

  return FlowResult<Scalar>{Curve<Scalar>(m, std::move(nodes)),
                            std::move(spreads), std::move(directions),
                            field.locality_h};
}

/// The two-sided flow of a cloud: traces forward and backward from x0
/// (default: the Fréchet mean) along the modified field and joins the two
/// halves, dropping the duplicate start node.
template <typename Scalar>
FlowResult<Scalar> principal_flow(
    const Manifold<Scalar>& m, std::type_identity_t<std::span<const ManifoldPoint<Scalar>>> cloud,
    Scalar h, std::type_identity_t<std::optional<ManifoldPoint<Scalar>>> x0,
    Scalar step, Scalar max_length) {
  const SampleField<Scalar> field = build_modified_field(m, cloud, h);
  ManifoldPoint<Scalar> start = x0.has_value() ? *x0 : frechet_mean(m, cloud);
  if (!x0.has_value()) {
    // A strongly bent cloud puts its mean off the data support; start from
    // the local mean around the nearest sample instead.
    Scalar best = std::numeric_limits<Scalar>::infinity();
    const ManifoldPoint<Scalar>* nearest = nullptr;
    for (const auto& p : cloud) {
      const Scalar d = m.geodesic_distance(start, p);
      if (d < best) {
        best = d;
        nearest = &p;
      }
    }
    if (best > h && nearest != nullptr) {
      const auto nb = find_neighborhood(m, cloud, *nearest, h);
      std::vector<ManifoldPoint<Scalar>> members;
      members.reserve(nb.size());
      for (const std::size_t i : nb.member_indices) members.push_back(cloud[i]);
      start = frechet_mean<Scalar>(m, members);
    }
  }
  const TangentVector<Scalar> v0 = field_at(m, start, field);

  const FlowResult<Scalar> fwd = trace_flow(m, field, start, v0, step, max_length);
  const FlowResult<Scalar> bwd = trace_flow(m, field, start, -v0, step, max_length);

  std::vector<ManifoldPoint<Scalar>> nodes;
  std::vector<Scalar> spreads;
  std::vector<TangentVector<Scalar>> directions;
  const std::size_t nb = bwd.curve.size();
  nodes.reserve(nb - 1 + fwd.curve.size());
  for (std::size_t i = nb; i-- > 1;) {
    nodes.push_back(bwd.curve.node(i));
    spreads.push_back(bwd.node_spread[i]);
    // Reversing the backward half flips its orientation.
    directions.push_back(-bwd.node_direction[i]);
  }
  for (std::size_t i = 0; i < fwd.curve.size(); ++i) {
    nodes.push_back(fwd.curve.node(i));
    spreads.push_back(fwd.node_spread[i]);
    directions.push_back(fwd.node_direction[i]);
  }
  return FlowResult<Scalar>{Curve<Scalar>(m, std::move(nodes)),
                            std::move(spreads), std::move(directions), h};
}

/// Wraps a bare curve as a zero-spread flow, with node directions taken
/// from the segments. Lets curve-level results (population curves,
/// Monte-Carlo estimates) feed the boundary tracer.
template <typename Scalar>
FlowResult<Scalar> flow_from_curve(const Manifold<Scalar>& m,
                                   Curve<Scalar> curve, Scalar locality_h) {
  const std::size_t n = curve.size();
  std::vector<TangentVector<Scalar>> directions;
  directions.reserve(n);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    directions.push_back(m.log_map(curve.node(k), curve.node(k + 1)).normalized());
  }
  if (n >= 2) {
    directions.push_back(
        (-m.log_map(curve.node(n - 1), curve.node(n - 2))).normalized());
  } else {
    directions.push_back(m.tangent_basis(curve.node(0))[0]);
  }
  return FlowResult<Scalar>{std::move(curve), std::vector<Scalar>(n, Scalar(0)),
                            std::move(directions), locality_h};
}

/// Offset curves at +/- sigma along the unit normal of the flow direction;
/// the side convention is consistent because node directions are.
template <typename Scalar>
std::pair<Curve<Scalar>, Curve<Scalar>> margin_curves(
    const Manifold<Scalar>& m, const FlowResult<Scalar>& flow) {
  if (flow.curve.size() < 2) {
    throw std::invalid_argument("margin_curves: flow needs at least 2 nodes");
  }
  std::vector<ManifoldPoint<Scalar>> left, right;
  left.reserve(flow.curve.size());
  right.reserve(flow.curve.size());
  for (std::size_t k = 0; k < flow.curve.size(); ++k) {
    const auto& q = flow.curve.node(k);
    const Vec3<Scalar> n =
        m.surface_normal(q).cross(flow.node_direction[k].vec()).normalized();
    const TangentVector<Scalar> offset(q, flow.node_spread[k] * n);
    left.push_back(m.exp_map(q, offset));
    right.push_back(m.exp_map(q, -offset));
  }
  return {Curve<Scalar>(m, dedup_nodes(m, left)),
          Curve<Scalar>(m, dedup_nodes(m, right))};
}

}  // namespace geoflow
