#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "geoflow/curve.hpp"
#include "geoflow/principal_flow.hpp"

namespace geoflow {

/// Nearest point of a polyline curve: the refined minimizer, its segment
/// index and in-segment fraction, and the achieved distance.
template <typename Scalar>
struct ProjectionResult {
  ManifoldPoint<Scalar> point;
  std::size_t node_index;   // segment the projection falls on
  Scalar arc_parameter;     // fraction within that segment
  Scalar distance;
  Scalar arc_length;        // global arc-length position of the projection
};

namespace detail {

// Golden-section minimization of f over [a, b]; returns (s*, f(s*)).
template <typename Scalar, typename F>
std::pair<Scalar, Scalar> golden_min(F&& f, Scalar a, Scalar b,
                                     Scalar tol = Scalar(1e-12)) {
  constexpr double invphi = 0.6180339887498949;
  Scalar x1 = b - Scalar(invphi) * (b - a);
  Scalar x2 = a + Scalar(invphi) * (b - a);
  Scalar f1 = f(x1), f2 = f(x2);
  while (b - a > tol) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - Scalar(invphi) * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + Scalar(invphi) * (b - a);
      f2 = f(x2);
    }
  }
  const Scalar s = (a + b) / Scalar(2);
  return {s, f(s)};
}

template <typename Scalar>
struct ProjectionCandidate {
  Scalar arc;       // refined global arc length
  Scalar distance;  // refined distance
};

// Node-level local minima of the distance profile, each refined over the
// two adjacent segments.
template <typename Scalar>
std::vector<ProjectionCandidate<Scalar>> projection_candidates(
    const Manifold<Scalar>& m, const ManifoldPoint<Scalar>& q,
    const Curve<Scalar>& curve) {
  const std::size_t n = curve.size();
  std::vector<Scalar> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = m.geodesic_distance(q, curve.node(i));
  }
  const auto dist_at = [&](Scalar s) {
    return m.geodesic_distance(q, curve.point_at(m, s));
  };
  std::vector<ProjectionCandidate<Scalar>> out;
  for (std::size_t i = 0; i < n; ++i) {
    const bool left_ok = (i == 0) || d[i] <= d[i - 1];
    const bool right_ok = (i + 1 == n) || d[i] <= d[i + 1];
    if (!(left_ok && right_ok)) continue;
    const Scalar lo = curve.cumulative_length(i == 0 ? 0 : i - 1);
    const Scalar hi = curve.cumulative_length(std::min(i + 1, n - 1));
    if (hi <= lo) {
      out.push_back({lo, d[i]});
      continue;
    }
    const auto [s, fs] = golden_min<Scalar>(dist_at, lo, hi);
    out.push_back({s, fs});
  }
  return out;
}

}  // namespace detail

/// Minimum geodesic distance from q to the curve; never raises the
/// uniqueness check (useful for Hausdorff-type metrics).
template <typename Scalar>
Scalar curve_distance(const Manifold<Scalar>& m, const ManifoldPoint<Scalar>& q,
                      const Curve<Scalar>& curve) {
  Scalar best = std::numeric_limits<Scalar>::infinity();
  for (const auto& c : detail::projection_candidates(m, q, curve)) {
    best = std::min(best, c.distance);
  }
  return best;
}

/// Projection of q onto the curve: nearest node found by scan, refined by
/// golden-section search on the adjacent segments. Two well-separated
/// near-optimal minimizers within tol_proj raise AmbiguousProjectionError.
template <typename Scalar>
ProjectionResult<Scalar> project_to_curve(const Manifold<Scalar>& m,
                                          const ManifoldPoint<Scalar>& q,
                                          const Curve<Scalar>& curve,
                                          Scalar tol_proj = Scalar(1e-6)) {
  auto candidates = detail::projection_candidates(m, q, curve);
  std::sort(candidates.begin(), candidates.end(),
            [](const auto& a, const auto& b) { return a.distance < b.distance; });
  const auto& best = candidates.front();
  const ManifoldPoint<Scalar> best_point = curve.point_at(m, best.arc);
  const Scalar separation_tol = Scalar(100) * tol_proj;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    if (candidates[i].distance > best.distance + tol_proj) break;
    const ManifoldPoint<Scalar> other = curve.point_at(m, candidates[i].arc);
    if (m.geodesic_distance(best_point, other) > separation_tol) {
      std::ostringstream msg;
      msg << "project_to_curve: two non-adjacent minimizers agree within "
          << tol_proj << " (projection is not unique)";
      throw AmbiguousProjectionError(msg.str());
    }
  }
  const auto [seg, frac] = curve.locate(best.arc);
  return ProjectionResult<Scalar>{best_point, seg, frac, best.distance,
                                  best.arc};
}

/// Spread sigma at an arbitrary curve position, linear in arc length
/// between node spreads.
template <typename Scalar>
Scalar spread_at_projection(const FlowResult<Scalar>& flow,
                            const ProjectionResult<Scalar>& proj) {
  if (flow.curve.size() == 1) return flow.node_spread[0];
  const std::size_t k = proj.node_index;
  return (Scalar(1) - proj.arc_parameter) * flow.node_spread[k] +
         proj.arc_parameter * flow.node_spread[k + 1];
}

/// Soft margin of q against a flow: distance to the flow minus the local
/// spread at the projection; negative inside the spread tube.
template <typename Scalar>
Scalar margin(const Manifold<Scalar>& m, const ManifoldPoint<Scalar>& q,
              const FlowResult<Scalar>& flow, Scalar tol_proj = Scalar(1e-6)) {
  const auto proj = project_to_curve(m, q, flow.curve, tol_proj);
  return proj.distance - spread_at_projection(flow, proj);
}

/// Tunables of the boundary tracer. A non-positive tol_margin resolves to
/// 1e-6 * (h1 + h2)/2 with an absolute floor of 1e-8.
template <typename Scalar>
struct BoundaryParams {
  Scalar tol_margin = Scalar(0);
  Scalar tol_proj = Scalar(1e-6);
  Scalar schild_rung = Scalar(0.01);
  int max_inner = 100;
  int max_bisect = 200;
};

template <typename Scalar>
Scalar resolved_tol_margin(const BoundaryParams<Scalar>& params,
                           const FlowResult<Scalar>& flow1,
                           const FlowResult<Scalar>& flow2) {
  if (params.tol_margin > Scalar(0)) return params.tol_margin;
  const Scalar scaled =
      Scalar(1e-6) * (flow1.locality_h + flow2.locality_h) / Scalar(2);
  return std::max(scaled, Scalar(1e-8));
}

/// Tracer state at one accepted boundary point.
template <typename Scalar>
struct BoundaryState {
  ManifoldPoint<Scalar> q;
  Scalar lambda;
  ProjectionResult<Scalar> p1;
  ProjectionResult<Scalar> p2;
  std::optional<TangentVector<Scalar>> prev_direction;  // anchored at q
  Scalar t;
  Scalar m1;
  Scalar m2;
  Scalar geodesic_dev;  // distance of q to the geodesic through p1, p2
};

namespace detail {

template <typename Scalar>
Scalar margin_of(const Manifold<Scalar>& m, const ManifoldPoint<Scalar>& q,
                 const FlowResult<Scalar>& flow,
                 const ProjectionResult<Scalar>& proj) {
  return proj.distance - spread_at_projection(flow, proj);
}

// Flow tangent at an interior curve position, blended from the adjacent
// node directions.
template <typename Scalar>
TangentVector<Scalar> flow_direction_at(const Manifold<Scalar>& m,
                                        const FlowResult<Scalar>& flow,
                                        const ProjectionResult<Scalar>& proj) {
  if (flow.curve.size() == 1) return flow.node_direction[0];
  const std::size_t k = proj.node_index;
  const Vec3<Scalar> blend =
      (Scalar(1) - proj.arc_parameter) * flow.node_direction[k].vec() +
      proj.arc_parameter * flow.node_direction[k + 1].vec();
  TangentVector<Scalar> t = m.project_to_tangent(proj.point, blend);
  if (t.norm() < Scalar(1e-12)) {
    t = m.project_to_tangent(proj.point, flow.node_direction[k].vec());
  }
  return t.normalized();
}

template <typename Scalar>
bool projection_at_endpoint(const ProjectionResult<Scalar>& proj,
                            const Curve<Scalar>& curve) {
  if (curve.size() == 1) return true;
  const Scalar frac_tol = Scalar(1e-6);
  if (proj.node_index == 0 && proj.arc_parameter < frac_tol) return true;
  if (proj.node_index == curve.segments() - 1 &&
      proj.arc_parameter > Scalar(1) - frac_tol) {
    return true;
  }
  return false;
}

// Both flow tangents Schild-transported to q and sign-aligned: to the
// previous travel direction when one exists, otherwise to each other.
template <typename Scalar>
std::pair<TangentVector<Scalar>, TangentVector<Scalar>> transported_flow_dirs(
    const Manifold<Scalar>& m, const BoundaryState<Scalar>& state,
    const FlowResult<Scalar>& flow1, const FlowResult<Scalar>& flow2,
    Scalar schild_rung) {
  TangentVector<Scalar> t1 = parallel_transport_schild(
      m, flow_direction_at(m, flow1, state.p1), state.q, schild_rung);
  TangentVector<Scalar> t2 = parallel_transport_schild(
      m, flow_direction_at(m, flow2, state.p2), state.q, schild_rung);
  if (state.prev_direction.has_value()) {
    const Vec3<Scalar>& ref = state.prev_direction->vec();
    if (t1.vec().dot(ref) < Scalar(0)) t1 = -t1;
    if (t2.vec().dot(ref) < Scalar(0)) t2 = -t2;
  } else if (t2.vec().dot(t1.vec()) < Scalar(0)) {
    t2 = -t2;
  }
  return {t1, t2};
}

template <typename Scalar>
Scalar point_to_geodesic(const Manifold<Scalar>& m,
                         const ManifoldPoint<Scalar>& q,
                         const ManifoldPoint<Scalar>& a,
                         const ManifoldPoint<Scalar>& b) {
  if (m.geodesic_distance(a, b) < Scalar(1e-14)) {
    return m.geodesic_distance(q, a);
  }
  const Curve<Scalar> seg(m, {a, b});
  return curve_distance(m, q, seg);
}

}  // namespace detail

/// Warm start followed by the matching pair and the equal-margin initial
/// point: c on flow2 (the seed's projection, or the mid-arc node), its
/// projection p0' on flow1, bisection for the equal-margin point on the
/// connecting geodesic, then a re-solve on the geodesic between the
/// matching pair. lambda starts at 1/2.
template <typename Scalar>
BoundaryState<Scalar> init_boundary(
    const Manifold<Scalar>& m, const FlowResult<Scalar>& flow1,
    const FlowResult<Scalar>& flow2,
    std::type_identity_t<std::optional<ManifoldPoint<Scalar>>> seed =
        std::nullopt,
    const BoundaryParams<Scalar>& params = {}) {
  const Scalar tol = resolved_tol_margin(params, flow1, flow2);

  const auto mid_arc_node = [&]() {
    const Scalar half = flow2.curve.total_length() / Scalar(2);
    std::size_t best = 0;
    for (std::size_t i = 1; i < flow2.curve.size(); ++i) {
      if (std::abs(flow2.curve.cumulative_length(i) - half) <
          std::abs(flow2.curve.cumulative_length(best) - half)) {
        best = i;
      }
    }
    return flow2.curve.node(best);
  };
  const ManifoldPoint<Scalar> c =
      seed.has_value()
          ? project_to_curve(m, *seed, flow2.curve, params.tol_proj).point
          : mid_arc_node();

  const auto bisect_on = [&](const ManifoldPoint<Scalar>& a,
                             const ManifoldPoint<Scalar>& b) {
    const auto balance = [&](Scalar s) {
      const ManifoldPoint<Scalar> qs = geodesic_point(m, a, b, s);
      return margin(m, qs, flow1, params.tol_proj) -
             margin(m, qs, flow2, params.tol_proj);
    };
    Scalar lo = Scalar(0), hi = Scalar(1);
    Scalar flo = balance(lo), fhi = balance(hi);
    if (std::abs(flo) <= tol) return geodesic_point(m, a, b, lo);
    if (std::abs(fhi) <= tol) return geodesic_point(m, a, b, hi);
    if ((flo > Scalar(0)) == (fhi > Scalar(0))) {
      throw SeparationError(
          "init_boundary: no equal-margin point on the connecting geodesic "
          "(the flows overlap here)");
    }
    Scalar best_s = lo, best_f = std::abs(flo);
    for (int it = 0; it < params.max_bisect; ++it) {
      const Scalar mid = (lo + hi) / Scalar(2);
      const Scalar fm = balance(mid);
      if (std::abs(fm) < best_f) {
        best_f = std::abs(fm);
        best_s = mid;
      }
      if (std::abs(fm) <= tol) return geodesic_point(m, a, b, mid);
      if ((fm > Scalar(0)) == (flo > Scalar(0))) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
    }
    throw NonConvergenceError(
        "init_boundary: bisection did not reach the margin tolerance",
        static_cast<double>(best_f));
  };

  const ProjectionResult<Scalar> p0 =
      project_to_curve(m, c, flow1.curve, params.tol_proj);
  const ManifoldPoint<Scalar> q0 = bisect_on(c, p0.point);
  const ManifoldPoint<Scalar> p2_of_q0 =
      project_to_curve(m, q0, flow2.curve, params.tol_proj).point;
  const ManifoldPoint<Scalar> q = bisect_on(p0.point, p2_of_q0);

  const ProjectionResult<Scalar> p1 =
      project_to_curve(m, q, flow1.curve, params.tol_proj);
  const ProjectionResult<Scalar> p2 =
      project_to_curve(m, q, flow2.curve, params.tol_proj);
  const Scalar m1 = detail::margin_of(m, q, flow1, p1);
  const Scalar m2 = detail::margin_of(m, q, flow2, p2);
  if (!(m1 > Scalar(0)) || !(m2 > Scalar(0))) {
    throw SeparationError(
        "init_boundary: the balanced point lies inside a spread tube (the "
        "flows overlap here)");
  }
  return BoundaryState<Scalar>{
      q,       Scalar(0.5),
      p1,      p2,
      std::nullopt, Scalar(0),
      m1,      m2,
      detail::point_to_geodesic(m, q, p1.point, p2.point)};
}

/// One tracer step: transport the flow tangents to q, fit lambda against
/// the previous direction, step by delta along the blend, and tune lambda
/// until the two margins at the new point balance within tolerance. The
/// tuning walk adapts: epsilon halves whenever the balance flips sign, and
/// the walk reverses when it moves away from the root.
template <typename Scalar>
BoundaryState<Scalar> step_boundary(const Manifold<Scalar>& m,
                                    const BoundaryState<Scalar>& state,
                                    const FlowResult<Scalar>& flow1,
                                    const FlowResult<Scalar>& flow2,
                                    Scalar delta, Scalar eps,
                                    const BoundaryParams<Scalar>& params = {}) {
  const Scalar tol = resolved_tol_margin(params, flow1, flow2);
  const auto [t1, t2] =
      detail::transported_flow_dirs(m, state, flow1, flow2, params.schild_rung);

  Scalar lambda = state.lambda;
  const Vec3<Scalar> diff = t1.vec() - t2.vec();
  const Scalar diff2 = diff.squaredNorm();
  if (state.prev_direction.has_value() && diff2 > Scalar(1e-24)) {
    const Scalar fit =
        (state.prev_direction->vec() - t2.vec()).dot(diff) / diff2;
    lambda = std::clamp(fit, Scalar(0), Scalar(1));
  }

  struct Candidate {
    ManifoldPoint<Scalar> q;
    TangentVector<Scalar> v;
    Scalar m1, m2, r, lambda;
  };
  const auto eval = [&](Scalar lam) -> std::optional<Candidate> {
    const Vec3<Scalar> blend = lam * t1.vec() + (Scalar(1) - lam) * t2.vec();
    const Scalar n = blend.norm();
    if (n < Scalar(1e-12)) return std::nullopt;
    const TangentVector<Scalar> v(state.q, blend / n);
    const ManifoldPoint<Scalar> qd = m.exp_map(state.q, v.scaled(delta));
    const Scalar m1 = margin(m, qd, flow1, params.tol_proj);
    const Scalar m2 = margin(m, qd, flow2, params.tol_proj);
    return Candidate{qd, v, m1, m2, m1 - m2, lam};
  };

  std::optional<Candidate> cur = eval(lambda);
  if (!cur.has_value()) cur = eval(Scalar(0.5));
  if (!cur.has_value()) {
    throw NonConvergenceError(
        "step_boundary: blended direction vanishes for every lambda", 0.0);
  }
  Candidate best = *cur;
  int dir = (cur->r < Scalar(0)) ? +1 : -1;
  for (int it = 0; it < params.max_inner && std::abs(cur->r) > tol; ++it) {
    Scalar next_lambda =
        std::clamp(cur->lambda + Scalar(dir) * eps, Scalar(0), Scalar(1));
    if (next_lambda == cur->lambda) {
      dir = -dir;
      eps /= Scalar(2);
      next_lambda =
          std::clamp(cur->lambda + Scalar(dir) * eps, Scalar(0), Scalar(1));
      if (next_lambda == cur->lambda) break;
    }
    const std::optional<Candidate> next = eval(next_lambda);
    if (!next.has_value()) {
      dir = -dir;
      eps /= Scalar(2);
      continue;
    }
    if ((next->r > Scalar(0)) != (cur->r > Scalar(0))) {
      eps /= Scalar(2);
      dir = (next->r < Scalar(0)) ? +1 : -1;
    } else if (std::abs(next->r) > std::abs(cur->r)) {
      dir = -dir;
      eps /= Scalar(2);
    }
    cur = next;
    if (std::abs(cur->r) < std::abs(best.r)) best = *cur;
  }
  if (std::abs(cur->r) <= tol && std::abs(cur->r) < std::abs(best.r)) {
    best = *cur;
  }
  if (std::abs(best.r) > tol) {
    throw NonConvergenceError(
        "step_boundary: margin balance did not reach tolerance",
        static_cast<double>(std::abs(best.r)));
  }

  const ProjectionResult<Scalar> p1 =
      project_to_curve(m, best.q, flow1.curve, params.tol_proj);
  const ProjectionResult<Scalar> p2 =
      project_to_curve(m, best.q, flow2.curve, params.tol_proj);
  if (detail::projection_at_endpoint(p1, flow1.curve) ||
      detail::projection_at_endpoint(p2, flow2.curve)) {
    throw EndOfFlowError(
        "step_boundary: a projection reached a flow endpoint");
  }
  return BoundaryState<Scalar>{
      best.q,
      best.lambda,
      p1,
      p2,
      m.parallel_transport(best.v, best.q),
      state.t + delta,
      best.m1,
      best.m2,
      detail::point_to_geodesic(m, best.q, p1.point, p2.point)};
}

/// Why one trace direction stopped.
struct BoundaryTermination {
  enum class Reason {
    max_length,
    end_of_flow,
    no_convergence,
    ambiguous_projection
  };
  Reason reason = Reason::max_length;
  std::string note;
  double best_residual = 0;
};

inline const char* to_string(BoundaryTermination::Reason r) {
  switch (r) {
    case BoundaryTermination::Reason::max_length: return "max_length";
    case BoundaryTermination::Reason::end_of_flow: return "end_of_flow";
    case BoundaryTermination::Reason::no_convergence: return "no_convergence";
    case BoundaryTermination::Reason::ambiguous_projection:
      return "ambiguous_projection";
  }
  return "unknown";
}

/// The traced boundary with per-node diagnostics. Failures of either trace
/// direction are attached as termination records; the nodes accepted up to
/// that point are kept.
template <typename Scalar>
struct BoundaryResult {
  Curve<Scalar> curve;
  std::vector<Scalar> per_node_margin;  // min of the two margins
  std::vector<Scalar> per_node_lambda;
  std::vector<Scalar> per_node_balance;       // |m1 - m2|
  std::vector<Scalar> per_node_geodesic_dev;  // distance to the matching geodesic
  BoundaryTermination forward;
  BoundaryTermination backward;
};

/// Iterates step_boundary both ways from the initial point until the flows
/// run out or max_length is reached per direction.
template <typename Scalar>
BoundaryResult<Scalar> trace_boundary(
    const Manifold<Scalar>& m, const FlowResult<Scalar>& flow1,
    const FlowResult<Scalar>& flow2, Scalar delta, Scalar eps,
    Scalar max_length, const BoundaryParams<Scalar>& params = {},
    std::type_identity_t<std::optional<ManifoldPoint<Scalar>>> seed =
        std::nullopt) {
  const BoundaryState<Scalar> s0 =
      init_boundary(m, flow1, flow2, seed, params);
  const auto [t1, t2] =
      detail::transported_flow_dirs(m, s0, flow1, flow2, params.schild_rung);
  const TangentVector<Scalar> u0 =
      m.project_to_tangent(s0.q, (t1.vec() + t2.vec()) / Scalar(2)).normalized();

  struct NodeRec {
    BoundaryState<Scalar> state;
  };
  const auto run = [&](const TangentVector<Scalar>& start_dir,
                       std::vector<NodeRec>& out) {
    BoundaryTermination term;
    BoundaryState<Scalar> state = s0;
    state.prev_direction = start_dir;
    while (state.t + delta <= max_length + Scalar(1e-12)) {
      try {
        state = step_boundary(m, state, flow1, flow2, delta, eps, params);
      } catch (const EndOfFlowError& e) {
        term.reason = BoundaryTermination::Reason::end_of_flow;
        term.note = e.what();
        return term;
      } catch (const NonConvergenceError& e) {
        term.reason = BoundaryTermination::Reason::no_convergence;
        term.note = e.what();
        term.best_residual = e.best_residual();
        return term;
      } catch (const AmbiguousProjectionError& e) {
        term.reason = BoundaryTermination::Reason::ambiguous_projection;
        term.note = e.what();
        return term;
      }
      out.push_back(NodeRec{state});
    }
    term.reason = BoundaryTermination::Reason::max_length;
    return term;
  };

  std::vector<NodeRec> fwd, bwd;
  BoundaryTermination fwd_term = run(u0, fwd);
  BoundaryTermination bwd_term = run(-u0, bwd);

  std::vector<ManifoldPoint<Scalar>> nodes;
  std::vector<Scalar> margins, lambdas, balances, devs;
  const auto push = [&](const BoundaryState<Scalar>& st) {
    nodes.push_back(st.q);
    margins.push_back(std::min(st.m1, st.m2));
    lambdas.push_back(st.lambda);
    balances.push_back(std::abs(st.m1 - st.m2));
    devs.push_back(st.geodesic_dev);
  };
  // Every accepted step moves by exactly delta, so nodes are distinct and
  // the per-node arrays stay aligned with the curve.
  for (std::size_t i = bwd.size(); i-- > 0;) push(bwd[i].state);
  push(s0);
  for (const auto& rec : fwd) push(rec.state);

  return BoundaryResult<Scalar>{Curve<Scalar>(m, nodes),
                                std::move(margins),
                                std::move(lambdas),
                                std::move(balances),
                                std::move(devs),
                                std::move(fwd_term),
                                std::move(bwd_term)};
}

template <typename Scalar>
Scalar boundary_length(const BoundaryResult<Scalar>& result) {
  return result.curve.total_length();
}

/// Symmetrized Hausdorff distance between two curves: max over the nodes of
/// one of the refined minimum geodesic distance to the other, both ways.
template <typename Scalar>
Scalar hausdorff_distance(const Manifold<Scalar>& m, const Curve<Scalar>& a,
                          const Curve<Scalar>& b) {
  Scalar h = Scalar(0);
  for (const auto& p : a.nodes()) h = std::max(h, curve_distance(m, p, b));
  for (const auto& p : b.nodes()) h = std::max(h, curve_distance(m, p, a));
  return h;
}

}  // namespace geoflow
