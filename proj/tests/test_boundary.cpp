#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "geoflow/boundary.hpp"
#include "test_util.hpp"

using namespace geoflow;
namespace tu = geoflow::testutil;

namespace {
const UnitSphere<double> S2;

Curve<double> latitude_curve(double lat, double t0, double t1, int n) {
  std::vector<ManifoldPoint<double>> nodes;
  for (int i = 0; i < n; ++i) {
    const double t = t0 + (t1 - t0) * double(i) / double(n - 1);
    nodes.emplace_back(std::cos(lat) * std::cos(t), std::cos(lat) * std::sin(t),
                       std::sin(lat));
  }
  return Curve<double>(S2, nodes);
}

FlowResult<double> latitude_flow(double lat, double sigma, double h = 0.2,
                                 double extent = 1.0, int n = 81) {
  auto flow = flow_from_curve(S2, latitude_curve(lat, -extent, extent, n), h);
  for (auto& s : flow.node_spread) s = sigma;
  return flow;
}

double max_abs_latitude(const Curve<double>& c) {
  double worst = 0.0;
  for (const auto& p : c.nodes()) {
    worst = std::max(worst, std::abs(std::asin(p.coords().z())));
  }
  return worst;
}
}  // namespace

TEST_CASE("projection onto a curve") {
  const auto curve = latitude_curve(0.0, -1.0, 1.0, 61);

  // A point of the curve projects to itself.
  const auto on = curve.point_at(S2, 0.37);
  const auto proj = project_to_curve(S2, on, curve);
  CHECK(proj.distance <= 1e-9);
  CHECK(S2.geodesic_distance(proj.point, on) <= 1e-9);

  // Off-curve point: distance matches latitude.
  const ManifoldPoint<double> q(std::cos(0.2) * std::cos(0.4),
                                std::cos(0.2) * std::sin(0.4), std::sin(0.2));
  const auto pq = project_to_curve(S2, q, curve);
  CHECK(pq.distance == doctest::Approx(0.2).epsilon(1e-6));

  // The north pole sees a 90-degree equator arc as a plateau of minimizers.
  const auto arc = latitude_curve(0.0, 0.0, pi_v<double> / 2, 31);
  CHECK_THROWS_AS(project_to_curve(S2, ManifoldPoint<double>(0, 0, 1), arc),
                  AmbiguousProjectionError);
}

TEST_CASE("projection matches a dense resampling oracle") {
  std::vector<ManifoldPoint<double>> nodes;
  for (int i = 0; i <= 60; ++i) {
    const double t = -1.0 + 2.0 * i / 60.0;
    nodes.emplace_back(std::cos(t), std::sin(t), 0.25 * std::sin(3.0 * t));
  }
  const Curve<double> wiggly(S2, nodes);

  std::mt19937_64 gen(51);
  for (int trial = 0; trial < 100; ++trial) {
    const auto q = tu::random_point(gen);
    double refined;
    try {
      refined = project_to_curve(S2, q, wiggly).distance;
    } catch (const AmbiguousProjectionError&) {
      continue;  // tie rule fired; nothing to compare
    }
    double dense = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s + 1 < wiggly.size(); ++s) {
      for (int k = 0; k <= 10; ++k) {
        const auto p = geodesic_point(S2, wiggly.node(s), wiggly.node(s + 1),
                                      double(k) / 10.0);
        dense = std::min(dense, S2.geodesic_distance(q, p));
      }
    }
    CHECK(refined <= dense + 1e-6);
  }
}

TEST_CASE("soft margin") {
  auto flow = latitude_flow(0.0, 0.1);

  // Distance 0.3, spread 0.1.
  const ManifoldPoint<double> q(std::cos(0.3), 0.0, std::sin(0.3));
  CHECK(margin(S2, q, flow) == doctest::Approx(0.2).epsilon(1e-6));

  // On the flow the margin is the negative spread.
  const auto on = flow.curve.point_at(S2, 0.8);
  CHECK(margin(S2, on, flow) == doctest::Approx(-0.1).epsilon(1e-6));

  // Margin is 1-Lipschitz-like over nearby pairs (constant spread here).
  std::mt19937_64 gen(52);
  for (int i = 0; i < 100; ++i) {
    const ManifoldPoint<double> base(
        std::cos(0.25) * std::cos(0.5 * (rng::uniform01(gen) - 0.5)),
        std::cos(0.25) * std::sin(0.5 * (rng::uniform01(gen) - 0.5)),
        std::sin(0.25));
    const auto dir = tu::random_unit_tangent(gen, base);
    const auto other = S2.exp_map(base, dir.scaled(0.02 * rng::uniform01(gen)));
    const double dm = std::abs(margin(S2, base, flow) - margin(S2, other, flow));
    CHECK(dm <= S2.geodesic_distance(base, other) * (1.0 + 1e-6) + 1e-9);
  }
}

TEST_CASE("boundary initialization on mirror-symmetric flows") {
  const double lat = 0.349;  // ~20 degrees
  const auto flow1 = latitude_flow(+lat, 0.05);
  const auto flow2 = latitude_flow(-lat, 0.05);

  const auto state = init_boundary(S2, flow1, flow2);
  CHECK(std::abs(std::asin(state.q.coords().z())) <= 1e-6);
  CHECK(state.lambda == 0.5);
  CHECK(std::abs(state.m1 - state.m2) <=
        resolved_tol_margin(BoundaryParams<double>{}, flow1, flow2));

  // Equal spreads put q at the geodesic midpoint of the matching pair.
  const auto mid = geodesic_point(S2, state.p1.point, state.p2.point, 0.5);
  CHECK(S2.geodesic_distance(state.q, mid) <= 1e-6);

  // Overlapping tubes cannot be separated.
  const auto fat1 = latitude_flow(+0.05, 0.2);
  const auto fat2 = latitude_flow(-0.05, 0.2);
  CHECK_THROWS_AS(init_boundary(S2, fat1, fat2), SeparationError);
}

TEST_CASE("asymmetric spreads shift the initial point") {
  const double lat = 0.349;
  const auto flow1 = latitude_flow(+lat, 0.10);
  const auto flow2 = latitude_flow(-lat, 0.05);
  const auto state = init_boundary(S2, flow1, flow2);
  // Equal margins with sigma1 > sigma2 push q toward flow2.
  CHECK(std::asin(state.q.coords().z()) < -1e-3);
  CHECK(std::abs(state.m1 - state.m2) <=
        resolved_tol_margin(BoundaryParams<double>{}, flow1, flow2));
}

TEST_CASE("one tracer step keeps the symmetric boundary balanced") {
  const double lat = 0.349;
  const auto flow1 = latitude_flow(+lat, 0.05);
  const auto flow2 = latitude_flow(-lat, 0.05);
  const BoundaryParams<double> params{};
  auto state = init_boundary(S2, flow1, flow2, std::nullopt, params);

  const auto east = TangentVector<double>(
      state.q, Vec3<double>(-state.q.coords().y(), state.q.coords().x(), 0.0))
                        .normalized();
  state.prev_direction = east;

  const auto next = step_boundary(S2, state, flow1, flow2, 0.01, 0.05, params);
  CHECK(std::abs(next.lambda - 0.5) <= 1e-3);
  CHECK(std::abs(std::asin(next.q.coords().z())) <= 1e-5);
  CHECK(std::abs(next.m1 - next.m2) <=
        resolved_tol_margin(params, flow1, flow2));
  CHECK(next.t == doctest::Approx(0.01));
  // Chordal flows shift refined projections by O(segment^2), so the
  // matching-geodesic deviation carries that floor on top of delta^2.
  const double seg = flow1.curve.total_length() / double(flow1.curve.segments());
  CHECK(next.geodesic_dev <= 2.0 * std::max(0.01, seg) * std::max(0.01, seg));
}

TEST_CASE("parallel transported equal directions make lambda irrelevant") {
  const double lat = 0.349;
  const auto flow1 = latitude_flow(+lat, 0.05);
  const auto flow2 = latitude_flow(-lat, 0.05);
  auto state = init_boundary(S2, flow1, flow2);
  const auto east = TangentVector<double>(
      state.q, Vec3<double>(-state.q.coords().y(), state.q.coords().x(), 0.0))
                        .normalized();
  state.prev_direction = east;
  // Latitude flows transport to the same east direction at the equator, so
  // any lambda gives the same step; the first candidate must be accepted.
  auto s1 = state;
  s1.lambda = 0.1;
  auto s2 = state;
  s2.lambda = 0.9;
  const auto n1 = step_boundary(S2, s1, flow1, flow2, 0.01, 0.05);
  const auto n2 = step_boundary(S2, s2, flow1, flow2, 0.01, 0.05);
  CHECK(S2.geodesic_distance(n1.q, n2.q) <= 1e-9);
}

TEST_CASE("traced boundary of symmetric latitude bands hugs the equator") {
  const double lat = 0.349;
  const auto flow1 = latitude_flow(+lat, 0.05, 0.2, 1.2, 97);
  const auto flow2 = latitude_flow(-lat, 0.05, 0.2, 1.2, 97);
  const double delta = 0.01;
  const BoundaryParams<double> params{};
  const auto result =
      trace_boundary(S2, flow1, flow2, delta, 0.05, 0.8, params);

  CHECK(result.curve.size() > 100);
  CHECK(max_abs_latitude(result.curve) <= std::max(delta, 1e-5));
  CHECK(result.forward.reason == BoundaryTermination::Reason::max_length);
  CHECK(result.backward.reason == BoundaryTermination::Reason::max_length);

  const double tol = resolved_tol_margin(params, flow1, flow2);
  const double seg = flow1.curve.total_length() / double(flow1.curve.segments());
  const double dev_bound = 2.0 * std::max(delta, seg) * std::max(delta, seg);
  for (std::size_t k = 0; k < result.curve.size(); ++k) {
    CHECK(result.per_node_balance[k] <= tol);
    CHECK(result.per_node_lambda[k] >= 0.0);
    CHECK(result.per_node_lambda[k] <= 1.0);
    CHECK(result.per_node_geodesic_dev[k] <= dev_bound);
  }

  // Deterministic re-run.
  const auto again =
      trace_boundary(S2, flow1, flow2, delta, 0.05, 0.8, params);
  REQUIRE(again.curve.size() == result.curve.size());
  for (std::size_t k = 0; k < result.curve.size(); ++k) {
    CHECK((again.curve.node(k).coords() - result.curve.node(k).coords()).norm() ==
          0.0);
  }
}

TEST_CASE("boundary terminates at the end of a flow") {
  // Short flows: projections hit the curve ends before max_length.
  const auto flow1 = latitude_flow(+0.3, 0.04, 0.2, 0.35, 29);
  const auto flow2 = latitude_flow(-0.3, 0.04, 0.2, 0.35, 29);
  const auto result = trace_boundary(S2, flow1, flow2, 0.01, 0.05, 5.0);
  CHECK(result.forward.reason == BoundaryTermination::Reason::end_of_flow);
  CHECK(result.backward.reason == BoundaryTermination::Reason::end_of_flow);
  CHECK(boundary_length(result) < 5.0);
}

TEST_CASE("boundary length bookkeeping") {
  BoundaryResult<double> single{
      Curve<double>(S2, {ManifoldPoint<double>(1.0, 0.0, 0.0)}),
      {0.1},
      {0.5},
      {0.0},
      {0.0},
      {},
      {}};
  CHECK(boundary_length(single) == 0.0);

  const auto flow1 = latitude_flow(+0.349, 0.05, 0.2, 1.2, 97);
  const auto flow2 = latitude_flow(-0.349, 0.05, 0.2, 1.2, 97);
  const auto shorter = trace_boundary(S2, flow1, flow2, 0.01, 0.05, 0.3);
  const auto longer = trace_boundary(S2, flow1, flow2, 0.01, 0.05, 0.6);
  CHECK(boundary_length(longer) >= boundary_length(shorter) - 1e-12);
  // Extent ~0.6 both ways within two step granules.
  CHECK(boundary_length(longer) == doctest::Approx(1.2).epsilon(0.05));

  // Equal spreads: accepted nodes sit mid-geodesic between the projections.
  for (std::size_t k = 0; k < longer.curve.size(); ++k) {
    const auto p1 = project_to_curve(S2, longer.curve.node(k), flow1.curve);
    const auto p2 = project_to_curve(S2, longer.curve.node(k), flow2.curve);
    const auto mid = geodesic_point(S2, p1.point, p2.point, 0.5);
    CHECK(S2.geodesic_distance(longer.curve.node(k), mid) <= 2e-3);
  }
}

TEST_CASE("hausdorff distance between curves") {
  const auto a = latitude_curve(0.0, -0.5, 0.5, 41);
  const auto b = latitude_curve(0.1, -0.5, 0.5, 41);
  const double h = hausdorff_distance(S2, a, b);
  CHECK(h == doctest::Approx(0.1).epsilon(1e-2));
  // The arccos metric resolves distances down to ~sqrt(machine eps).
  CHECK(hausdorff_distance(S2, a, a) <= 1e-7);
}
