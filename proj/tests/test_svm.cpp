#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "geoflow/random_sim.hpp"
#include "geoflow/svm.hpp"
#include "test_util.hpp"

using namespace geoflow;
namespace tu = geoflow::testutil;

namespace {
const UnitSphere<double> S2;

using V2 = Vec2<double>;

// Brute-force margin over separator angles: for a unit normal n the best
// separating line has margin (min_A <a,n> - max_B <b,n>)/2.
double best_margin_by_angle_scan(const std::vector<V2>& a,
                                 const std::vector<V2>& b, double step) {
  double best = -1.0;
  for (double th = 0.0; th < 2 * pi_v<double>; th += step) {
    const V2 n(std::cos(th), std::sin(th));
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& p : a) lo = std::min(lo, n.dot(p));
    for (const auto& p : b) hi = std::max(hi, n.dot(p));
    best = std::max(best, (lo - hi) / 2.0);
  }
  return best;
}
}  // namespace

TEST_CASE("hard margin separator of two singletons") {
  const std::vector<V2> a{V2(0, 1)};
  const std::vector<V2> b{V2(0, -1)};
  const auto line = hard_margin_svm<double>(a, b);
  CHECK((line.normal - V2(0, 1)).norm() < 1e-14);
  CHECK(line.offset == doctest::Approx(0.0));
  CHECK(line.margin == doctest::Approx(1.0));
}

TEST_CASE("translation equivariance") {
  std::mt19937_64 gen(61);
  std::vector<V2> a, b;
  for (int i = 0; i < 8; ++i) {
    a.emplace_back(rng::normal01(gen) * 0.3, 2.0 + rng::normal01(gen) * 0.3);
    b.emplace_back(rng::normal01(gen) * 0.3, -2.0 + rng::normal01(gen) * 0.3);
  }
  const auto base = hard_margin_svm<double>(a, b);
  const V2 shift(1.7, -0.4);
  std::vector<V2> a2 = a, b2 = b;
  for (auto& p : a2) p += shift;
  for (auto& p : b2) p += shift;
  const auto moved = hard_margin_svm<double>(a2, b2);
  CHECK((moved.normal - base.normal).norm() < 1e-12);
  CHECK(moved.margin == doctest::Approx(base.margin).epsilon(1e-12));
  CHECK(moved.offset ==
        doctest::Approx(base.offset + base.normal.dot(shift)).epsilon(1e-10));
}

TEST_CASE("margin matches the exhaustive angle oracle") {
  std::mt19937_64 gen(62);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<V2> a, b;
    for (int i = 0; i < 10; ++i) {
      a.emplace_back(rng::normal01(gen) * 0.5, 1.5 + rng::normal01(gen) * 0.5);
      b.emplace_back(rng::normal01(gen) * 0.5, -1.5 + rng::normal01(gen) * 0.5);
    }
    const auto line = hard_margin_svm<double>(a, b);
    const double oracle = best_margin_by_angle_scan(a, b, 1e-3);
    CHECK(line.margin >= oracle - 1e-9);          // scan cannot beat the solver
    CHECK(line.margin <= oracle + 2e-3 * line.margin + 1e-6);
    // All points separated with at least the reported margin.
    for (const auto& p : a) {
      CHECK(line.normal.dot(p) - line.offset >= line.margin - 1e-9);
    }
    for (const auto& p : b) {
      CHECK(line.normal.dot(p) - line.offset <= -line.margin + 1e-9);
    }
  }
}

TEST_CASE("interleaved classes are inseparable") {
  const std::vector<V2> a{V2(0, 0), V2(2, 0)};
  const std::vector<V2> b{V2(1, 0)};
  CHECK_THROWS_AS(hard_margin_svm<double>(a, b), InseparableError);

  // Hull containment.
  const std::vector<V2> big{V2(-2, -2), V2(2, -2), V2(2, 2), V2(-2, 2)};
  const std::vector<V2> inside{V2(0.1, 0.0)};
  CHECK_THROWS_AS(hard_margin_svm<double>(big, inside), InseparableError);

  // Crossing hull edges.
  const std::vector<V2> cross1{V2(-1, 0), V2(1, 0)};
  const std::vector<V2> cross2{V2(0, -1), V2(0, 1)};
  CHECK_THROWS_AS(hard_margin_svm<double>(cross1, cross2), InseparableError);

  try {
    hard_margin_svm<double>(a, b);
    CHECK(false);
  } catch (const InseparableError& e) {
    CHECK(e.index_b() == 0);  // witness pair carried out
  }
}

namespace {
ClassModel<double> band_model(int label, double lat, double sd, int n,
                              double h, std::uint64_t seed) {
  std::vector<ManifoldPoint<double>> nodes;
  for (int i = 0; i < 161; ++i) {
    const double t = -1.0 + 2.0 * i / 160.0;
    nodes.emplace_back(std::cos(lat) * std::cos(t), std::cos(lat) * std::sin(t),
                       std::sin(lat));
  }
  const auto dist =
      make_curve_distribution(Curve<double>(S2, nodes), sd, seed);
  auto points = sample_along_curve(S2, dist, n);
  auto flow = principal_flow<double>(S2, points, h, std::nullopt, h / 5.0, 0.8);
  return ClassModel<double>{label, std::move(points), std::move(flow)};
}
}  // namespace

TEST_CASE("local separator geometry") {
  // Singleton neighborhoods: the separator is the perpendicular bisector.
  const ManifoldPoint<double> p1(std::cos(0.2), 0.0, std::sin(0.2));
  const ManifoldPoint<double> p2(std::cos(0.2), 0.0, -std::sin(0.2));
  ClassModel<double> m1{+1, {p1}, flow_from_curve(S2, Curve<double>(S2, {p1}), 0.3)};
  ClassModel<double> m2{-1, {p2}, flow_from_curve(S2, Curve<double>(S2, {p2}), 0.3)};
  const auto sep = local_separator(S2, m1, m2, p1, p2);
  CHECK(std::abs(sep.offset) < 1e-10);
  CHECK(sep.margin == doctest::Approx(0.2).epsilon(1e-10));
  const auto mid = geodesic_point(S2, p1, p2, 0.5);
  CHECK(S2.geodesic_distance(sep.base, mid) < 1e-12);
  // Members fall on opposite sides of the lifted line.
  const auto basis = S2.tangent_basis(sep.base);
  const auto side = [&](const ManifoldPoint<double>& x) {
    const Vec3<double> l = S2.log_map(sep.base, x).vec();
    return l.dot(sep.normal.vec()) - sep.offset;
  };
  CHECK(side(p1) > 0.0);
  CHECK(side(p2) < 0.0);

  // Mirror-symmetric noisy bands: the separator geodesic hugs the equator.
  const auto ma = band_model(+1, +0.35, 0.02, 150, 0.2, 71);
  const auto mb = band_model(-1, -0.35, 0.02, 150, 0.2, 72);
  const auto pa = ma.flow.curve.point_at(S2, ma.flow.curve.total_length() / 2);
  const auto pb = mb.flow.curve.point_at(S2, mb.flow.curve.total_length() / 2);
  const auto sep2 = local_separator(S2, ma, mb, pa, pb);
  const auto side2 = [&](const ManifoldPoint<double>& x) {
    return S2.log_map(sep2.base, x).vec().dot(sep2.normal.vec()) - sep2.offset;
  };
  for (const auto& x : sep2.config1) CHECK(side2(x) > 0.0);
  for (const auto& x : sep2.config2) CHECK(side2(x) < 0.0);
  const auto geo = separator_geodesic(S2, sep2, 0.3);
  for (const auto& node : geo.nodes()) {
    CHECK(std::abs(std::asin(node.coords().z())) <= 0.06);
  }
  CHECK(sep2.margin > 0.0);
}

TEST_CASE("piecewise separators along a traced boundary") {
  const auto ma = band_model(+1, +0.35, 0.02, 150, 0.2, 73);
  const auto mb = band_model(-1, -0.35, 0.02, 150, 0.2, 74);
  const auto boundary =
      trace_boundary(S2, ma.flow, mb.flow, 0.02, 0.05, 0.5);
  const auto pieces = piecewise_svm_boundary(S2, ma, mb, boundary);
  CHECK(pieces.size() == boundary.curve.size());
  std::size_t ok = 0;
  for (const auto& e : pieces) {
    if (e.separator.has_value()) {
      ++ok;
      CHECK(e.status == "ok");
      CHECK(e.separator->margin >= 0.0);
    }
  }
  CHECK(ok >= pieces.size() / 2);
}

TEST_CASE("equivalence metrics on aligned and perpendicular geodesics") {
  const ManifoldPoint<double> base(1.0, 0.0, 0.0);
  LocalSeparator<double> sep{
      base, TangentVector<double>(base, Vec3<double>(0, 0, 1)), 0.0, 0.1,
      {ManifoldPoint<double>(std::cos(0.2) * std::cos(0.1),
                             std::cos(0.2) * std::sin(0.1), std::sin(0.2))},
      {ManifoldPoint<double>(std::cos(0.2) * std::cos(0.1),
                             std::cos(0.2) * std::sin(0.1), -std::sin(0.2))}};

  // Segment along the equator: identical to the separator geodesic.
  std::vector<ManifoldPoint<double>> eq;
  for (int i = -5; i <= 5; ++i) {
    const double t = 0.05 * i;
    eq.emplace_back(std::cos(t), std::sin(t), 0.0);
  }
  const auto aligned = equivalence_metrics(S2, Curve<double>(S2, eq), sep);
  CHECK(aligned.angle <= 1e-10);
  CHECK(aligned.margin_gap <= 1e-9);

  // Meridian segment: perpendicular.
  std::vector<ManifoldPoint<double>> mer;
  for (int i = -5; i <= 5; ++i) {
    const double t = 0.05 * i;
    mer.emplace_back(std::cos(t), 0.0, std::sin(t));
  }
  const auto perp = equivalence_metrics(S2, Curve<double>(S2, mer), sep);
  CHECK(perp.angle == doctest::Approx(pi_v<double> / 2).epsilon(1e-9));
}
