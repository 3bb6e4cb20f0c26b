#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <type_traits>
#include <string>
#include <vector>

#include "geoflow/boundary.hpp"
#include "geoflow/classify.hpp"
#include "geoflow/curve.hpp"

namespace geoflow {

/// Maximum-margin separating line in a 2-D tangent chart: the decision line
/// is { z : <normal, z> = offset } with unit normal pointing at class A.
template <typename Scalar>
struct SvmLine {
  Vec2<Scalar> normal;
  Scalar offset;
  Scalar margin;
};

namespace svm_detail {

template <typename Scalar>
Scalar cross2(const Vec2<Scalar>& o, const Vec2<Scalar>& a,
              const Vec2<Scalar>& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

// Andrew monotone chain; returns hull vertex positions in CCW order along
// with their original indices. Collinear inputs collapse to the two
// extremes, a single input stays a single vertex.
template <typename Scalar>
void convex_hull(std::span<const Vec2<Scalar>> pts,
                 std::vector<Vec2<Scalar>>& hull,
                 std::vector<std::size_t>& hull_idx) {
  std::vector<std::size_t> order(pts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (pts[a].x() != pts[b].x()) return pts[a].x() < pts[b].x();
    return pts[a].y() < pts[b].y();
  });
  hull.clear();
  hull_idx.clear();
  const auto build = [&](auto begin, auto end) {
    const std::size_t base = hull.size();
    for (auto it = begin; it != end; ++it) {
      const Vec2<Scalar>& p = pts[*it];
      while (hull.size() >= base + 2 &&
             cross2(hull[hull.size() - 2], hull[hull.size() - 1], p) <=
                 Scalar(0)) {
        hull.pop_back();
        hull_idx.pop_back();
      }
      hull.push_back(p);
      hull_idx.push_back(*it);
    }
  };
  build(order.begin(), order.end());
  hull.pop_back();
  hull_idx.pop_back();
  build(order.rbegin(), order.rend());
  hull.pop_back();
  hull_idx.pop_back();
  if (hull.empty()) {  // all inputs identical
    hull.push_back(pts[order.front()]);
    hull_idx.push_back(order.front());
  }
}

template <typename Scalar>
Vec2<Scalar> closest_on_segment(const Vec2<Scalar>& p, const Vec2<Scalar>& a,
                                const Vec2<Scalar>& b) {
  const Vec2<Scalar> ab = b - a;
  const Scalar len2 = ab.squaredNorm();
  if (len2 == Scalar(0)) return a;
  const Scalar t = std::clamp((p - a).dot(ab) / len2, Scalar(0), Scalar(1));
  return a + t * ab;
}

template <typename Scalar>
bool segments_intersect(const Vec2<Scalar>& a, const Vec2<Scalar>& b,
                        const Vec2<Scalar>& c, const Vec2<Scalar>& d) {
  const Scalar d1 = cross2(c, d, a);
  const Scalar d2 = cross2(c, d, b);
  const Scalar d3 = cross2(a, b, c);
  const Scalar d4 = cross2(a, b, d);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}

template <typename Scalar>
bool inside_convex(const Vec2<Scalar>& p, std::span<const Vec2<Scalar>> hull) {
  if (hull.size() < 3) return false;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Vec2<Scalar>& a = hull[i];
    const Vec2<Scalar>& b = hull[(i + 1) % hull.size()];
    if (cross2(a, b, p) < Scalar(0)) return false;
  }
  return true;
}

}  // namespace svm_detail

/// Hard-margin linear separator via the minimum distance between the two
/// convex hulls: the maximum-margin line is the perpendicular bisector of
/// the closest hull pair. Exact for the small local configurations this is
/// used on.
template <typename Scalar>
SvmLine<Scalar> hard_margin_svm(std::type_identity_t<std::span<const Vec2<Scalar>>> pts_a,
                                std::type_identity_t<std::span<const Vec2<Scalar>>> pts_b) {
  namespace sd = svm_detail;
  if (pts_a.empty() || pts_b.empty()) {
    throw std::invalid_argument("hard_margin_svm: empty point set");
  }
  std::vector<Vec2<Scalar>> hull_a, hull_b;
  std::vector<std::size_t> idx_a, idx_b;
  sd::convex_hull(pts_a, hull_a, idx_a);
  sd::convex_hull(pts_b, hull_b, idx_b);

  // Hull containment or edge crossing means the classes interleave.
  if (sd::inside_convex<Scalar>(hull_a.front(), hull_b) ||
      sd::inside_convex<Scalar>(hull_b.front(), hull_a)) {
    throw InseparableError(
        "hard_margin_svm: one class's hull contains a point of the other",
        idx_a.front(), idx_b.front());
  }
  for (std::size_t i = 0; i + 1 <= hull_a.size() && hull_a.size() > 1; ++i) {
    for (std::size_t j = 0; j + 1 <= hull_b.size() && hull_b.size() > 1; ++j) {
      const auto& a0 = hull_a[i];
      const auto& a1 = hull_a[(i + 1) % hull_a.size()];
      const auto& b0 = hull_b[j];
      const auto& b1 = hull_b[(j + 1) % hull_b.size()];
      if (sd::segments_intersect(a0, a1, b0, b1)) {
        throw InseparableError("hard_margin_svm: hull edges cross", idx_a[i],
                               idx_b[j]);
      }
    }
  }

  Scalar best = std::numeric_limits<Scalar>::infinity();
  Vec2<Scalar> on_a = hull_a.front(), on_b = hull_b.front();
  std::size_t wit_a = idx_a.front(), wit_b = idx_b.front();
  const auto consider = [&](const Vec2<Scalar>& pa, const Vec2<Scalar>& pb,
                            std::size_t ia, std::size_t ib) {
    const Scalar d = (pa - pb).norm();
    if (d < best) {
      best = d;
      on_a = pa;
      on_b = pb;
      wit_a = ia;
      wit_b = ib;
    }
  };
  for (std::size_t i = 0; i < hull_a.size(); ++i) {
    if (hull_b.size() == 1) {
      consider(hull_a[i], hull_b[0], idx_a[i], idx_b[0]);
      continue;
    }
    for (std::size_t j = 0; j < hull_b.size(); ++j) {
      const auto c = sd::closest_on_segment(hull_a[i], hull_b[j],
                                            hull_b[(j + 1) % hull_b.size()]);
      consider(hull_a[i], c, idx_a[i], idx_b[j]);
    }
  }
  for (std::size_t j = 0; j < hull_b.size(); ++j) {
    if (hull_a.size() == 1) {
      consider(hull_a[0], hull_b[j], idx_a[0], idx_b[j]);
      continue;
    }
    for (std::size_t i = 0; i < hull_a.size(); ++i) {
      const auto c = sd::closest_on_segment(hull_b[j], hull_a[i],
                                            hull_a[(i + 1) % hull_a.size()]);
      consider(c, hull_b[j], idx_a[i], idx_b[j]);
    }
  }
  if (!(best > Scalar(1e-12))) {
    throw InseparableError("hard_margin_svm: hulls touch", wit_a, wit_b);
  }
  const Vec2<Scalar> n = (on_a - on_b) / best;
  const Scalar offset = n.dot((on_a + on_b) / Scalar(2));
  return SvmLine<Scalar>{n, offset, best / Scalar(2)};
}

/// A hard-margin separator lifted back to the manifold: the separating
/// geodesic runs through exp_base(offset * normal) orthogonally to the unit
/// normal. The local configurations that produced it are kept for the
/// equivalence metrics.
template <typename Scalar>
struct LocalSeparator {
  ManifoldPoint<Scalar> base;
  TangentVector<Scalar> normal;  // unit tangent at base
  Scalar offset;
  Scalar margin;
  std::vector<ManifoldPoint<Scalar>> config1;
  std::vector<ManifoldPoint<Scalar>> config2;
};

/// Lifts the two neighborhoods to the tangent chart at the geodesic
/// midpoint of (p1, p2), separates them with the hard-margin solver and
/// maps the line back.
template <typename Scalar>
LocalSeparator<Scalar> local_separator(const Manifold<Scalar>& m,
                                       const ClassModel<Scalar>& model1,
                                       const ClassModel<Scalar>& model2,
                                       const ManifoldPoint<Scalar>& p1,
                                       const ManifoldPoint<Scalar>& p2) {
  const ManifoldPoint<Scalar> base = geodesic_point(m, p1, p2, Scalar(0.5));
  const auto basis = m.tangent_basis(base);

  const auto lift = [&](const std::vector<ManifoldPoint<Scalar>>& cloud,
                        Scalar h, std::vector<Vec2<Scalar>>& chart,
                        std::vector<ManifoldPoint<Scalar>>& members,
                        const ManifoldPoint<Scalar>& center) {
    const auto nb = find_neighborhood<Scalar>(
        m, std::span<const ManifoldPoint<Scalar>>(cloud), center, h);
    for (const std::size_t i : nb.member_indices) {
      const Vec3<Scalar> l = m.log_map(base, cloud[i]).vec();
      chart.emplace_back(l.dot(basis[0].vec()), l.dot(basis[1].vec()));
      members.push_back(cloud[i]);
    }
  };
  std::vector<Vec2<Scalar>> chart1, chart2;
  std::vector<ManifoldPoint<Scalar>> members1, members2;
  lift(model1.cloud, model1.flow.locality_h, chart1, members1, p1);
  lift(model2.cloud, model2.flow.locality_h, chart2, members2, p2);

  const SvmLine<Scalar> line = hard_margin_svm<Scalar>(chart1, chart2);
  const Vec3<Scalar> n3 =
      line.normal.x() * basis[0].vec() + line.normal.y() * basis[1].vec();
  return LocalSeparator<Scalar>{base, TangentVector<Scalar>(base, n3).normalized(),
                                line.offset, line.margin, std::move(members1),
                                std::move(members2)};
}

/// The separating geodesic of a local separator, discretized to +/- extent
/// around its anchor point.
template <typename Scalar>
Curve<Scalar> separator_geodesic(const Manifold<Scalar>& m,
                                 const LocalSeparator<Scalar>& sep,
                                 Scalar extent, Scalar spacing = Scalar(0.05)) {
  const ManifoldPoint<Scalar> anchor =
      m.exp_map(sep.base, sep.normal.scaled(sep.offset));
  const Vec3<Scalar> along =
      m.surface_normal(sep.base).cross(sep.normal.vec());
  const TangentVector<Scalar> dir =
      m.project_to_tangent(anchor, along).normalized();
  const int half = std::max(1, static_cast<int>(std::ceil(extent / spacing)));
  std::vector<ManifoldPoint<Scalar>> nodes;
  nodes.reserve(2 * half + 1);
  for (int k = -half; k <= half; ++k) {
    nodes.push_back(m.exp_map(anchor, dir.scaled(extent * Scalar(k) / Scalar(half))));
  }
  return Curve<Scalar>(m, dedup_nodes(m, nodes));
}

template <typename Scalar>
struct PiecewiseSvmEntry {
  std::size_t node_index;
  std::optional<LocalSeparator<Scalar>> separator;
  std::string status;  // "ok" or the error that skipped the node
};

/// One local separator per boundary node, anchored at the node's matched
/// projections onto the two flows; nodes whose neighborhoods cannot be
/// separated are skipped with a status.
template <typename Scalar>
std::vector<PiecewiseSvmEntry<Scalar>> piecewise_svm_boundary(
    const Manifold<Scalar>& m, const ClassModel<Scalar>& model1,
    const ClassModel<Scalar>& model2, const BoundaryResult<Scalar>& boundary,
    Scalar tol_proj = Scalar(1e-6)) {
  std::vector<PiecewiseSvmEntry<Scalar>> out;
  out.reserve(boundary.curve.size());
  for (std::size_t i = 0; i < boundary.curve.size(); ++i) {
    const auto& q = boundary.curve.node(i);
    try {
      const auto pr1 = project_to_curve(m, q, model1.flow.curve, tol_proj);
      const auto pr2 = project_to_curve(m, q, model2.flow.curve, tol_proj);
      out.push_back(PiecewiseSvmEntry<Scalar>{
          i, local_separator(m, model1, model2, pr1.point, pr2.point), "ok"});
    } catch (const Error& e) {
      out.push_back(PiecewiseSvmEntry<Scalar>{
          i, std::nullopt, e.name() + std::string(": ") + e.what()});
    }
  }
  return out;
}

template <typename Scalar>
struct EquivalenceMetrics {
  Scalar angle;       // radians in [0, pi/2]
  Scalar margin_gap;  // | m(segment) - m(separator geodesic) |
};

/// Compares a boundary segment with a local separator: the angle between
/// the segment chord (transported to the separator base) and the separator
/// direction, and the gap between the two margins over the separator's
/// local configuration.
template <typename Scalar>
EquivalenceMetrics<Scalar> equivalence_metrics(const Manifold<Scalar>& m,
                                               const Curve<Scalar>& segment,
                                               const LocalSeparator<Scalar>& sep) {
  const TangentVector<Scalar> chord =
      m.log_map(segment.node(0), segment.node(segment.size() - 1));
  const Vec3<Scalar> chord_at_base =
      m.parallel_transport(chord, sep.base).vec().normalized();
  const Vec3<Scalar> along =
      m.surface_normal(sep.base).cross(sep.normal.vec()).normalized();
  const Scalar c = std::clamp(std::abs(chord_at_base.dot(along)), Scalar(0),
                              Scalar(1));
  const Scalar angle = std::acos(c);

  Scalar extent = Scalar(0.2);
  for (const auto& x : sep.config1) {
    extent = std::max(extent, m.geodesic_distance(sep.base, x) + Scalar(0.2));
  }
  for (const auto& x : sep.config2) {
    extent = std::max(extent, m.geodesic_distance(sep.base, x) + Scalar(0.2));
  }
  const Curve<Scalar> svm_curve = separator_geodesic(m, sep, extent);

  const auto class_min = [&](const std::vector<ManifoldPoint<Scalar>>& cfg,
                             const Curve<Scalar>& curve) {
    Scalar best = std::numeric_limits<Scalar>::infinity();
    for (const auto& x : cfg) best = std::min(best, curve_distance(m, x, curve));
    return best;
  };
  const Scalar m_seg = std::min(class_min(sep.config1, segment),
                                class_min(sep.config2, segment));
  const Scalar m_svm = std::min(class_min(sep.config1, svm_curve),
                                class_min(sep.config2, svm_curve));
  return EquivalenceMetrics<Scalar>{angle, std::abs(m_seg - m_svm)};
}

}  // namespace geoflow
