#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "geoflow/random_sim.hpp"
#include "test_util.hpp"

using namespace geoflow;

namespace {
const UnitSphere<double> S2;

Curve<double> equator(double extent, int n) {
  std::vector<ManifoldPoint<double>> nodes;
  for (int i = 0; i < n; ++i) {
    const double t = -extent + 2 * extent * double(i) / double(n - 1);
    nodes.emplace_back(std::cos(t), std::sin(t), 0.0);
  }
  return Curve<double>(S2, nodes);
}
}  // namespace

TEST_CASE("sampling stays on the curve as the noise vanishes") {
  const auto dist = make_curve_distribution(equator(1.0, 201), 1e-12, 5);
  for (const auto& p : sample_along_curve(S2, dist, 500)) {
    CHECK(std::abs(p.coords().z()) <= 1e-9);
  }
}

TEST_CASE("identical seeds reproduce the draw exactly") {
  const auto dist = make_curve_distribution(equator(1.0, 201), 0.05, 42);
  const auto a = sample_along_curve(S2, dist, 300);
  const auto b = sample_along_curve(S2, dist, 300);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK((a[i].coords() - b[i].coords()).norm() == 0.0);
  }
  const auto other = make_curve_distribution(equator(1.0, 201), 0.05, 43);
  const auto c = sample_along_curve(S2, other, 300);
  CHECK((a[0].coords() - c[0].coords()).norm() > 0.0);
}

TEST_CASE("normal offsets average to zero") {
  const double sd = 0.05;
  const std::size_t n = 10000;
  const auto dist = make_curve_distribution(equator(1.0, 201), sd, 7);
  const auto samples = sample_along_curve(S2, dist, n);
  double mean = 0.0, mean_sq = 0.0;
  for (const auto& p : samples) {
    const double z = std::asin(p.coords().z());  // signed offset from equator
    mean += z;
    mean_sq += z * z;
  }
  mean /= double(n);
  mean_sq /= double(n);
  CHECK(std::abs(mean) <= 3.0 * sd / std::sqrt(double(n)));
  CHECK(std::sqrt(mean_sq) == doctest::Approx(sd).epsilon(0.1));
}

TEST_CASE("continuous flow estimate recovers a symmetric population") {
  const auto pop = equator(1.0, 201);
  const double h = 0.15, sd = 0.05;
  const std::size_t n_mc = 8000;
  std::vector<double> grid;
  for (int i = 0; i <= 20; ++i) grid.push_back(pop.total_length() * i / 20.0);

  const auto est = continuous_flow_estimate(
      S2, make_curve_distribution(pop, sd, 11), h, grid, n_mc);
  // MC error of a mean over ~n_mc*2h/L members.
  const double n_eff = double(n_mc) * 2.0 * h / pop.total_length();
  const double tol = 3.0 * sd / std::sqrt(n_eff) + 1e-3;
  for (const auto& node : est.nodes()) {
    CHECK(std::abs(std::asin(node.coords().z())) <= tol);
  }

  // Vanishing noise pins the estimate onto the population curve (the
  // along-curve position still carries finite-sample wobble).
  const auto tight = continuous_flow_estimate(
      S2, make_curve_distribution(pop, 1e-9, 12), h, grid, 4000);
  for (std::size_t i = 0; i < tight.size(); ++i) {
    CHECK(curve_distance(S2, tight.node(i), pop) <= 1e-6);
  }

  CHECK_THROWS_AS(
      continuous_flow_estimate(S2, make_curve_distribution(pop, 0.01, 13),
                               0.15, grid, 1),
      EmptyNeighborhoodError);
}

TEST_CASE("doubling the sample budget keeps the estimate stable") {
  const auto pop = equator(1.0, 201);
  const double h = 0.15, sd = 0.04;
  std::vector<double> grid;
  for (int i = 0; i <= 10; ++i) grid.push_back(pop.total_length() * i / 10.0);
  const auto est1 = continuous_flow_estimate(
      S2, make_curve_distribution(pop, sd, 21), h, grid, 5000);
  const auto est2 = continuous_flow_estimate(
      S2, make_curve_distribution(pop, sd, 21), h, grid, 10000);
  const double n_eff = 5000.0 * 2.0 * h / pop.total_length();
  const double pred = 3.0 * sd / std::sqrt(n_eff);
  for (std::size_t i = 0; i < est1.size(); ++i) {
    CHECK(S2.geodesic_distance(est1.node(i), est2.node(i)) <= 2.0 * pred);
  }
}

TEST_CASE("convergence experiment trends toward the population objects") {
  const auto pop1 = Curve<double>(S2, [&] {
    std::vector<ManifoldPoint<double>> nodes;
    for (int i = 0; i <= 160; ++i) {
      const double t = -0.8 + 1.6 * i / 160.0;
      nodes.emplace_back(std::cos(0.25) * std::cos(t),
                         std::cos(0.25) * std::sin(t), std::sin(0.25));
    }
    return nodes;
  }());
  const auto pop2 = Curve<double>(S2, [&] {
    std::vector<ManifoldPoint<double>> nodes;
    for (int i = 0; i <= 160; ++i) {
      const double t = -0.8 + 1.6 * i / 160.0;
      nodes.emplace_back(std::cos(-0.25) * std::cos(t),
                         std::cos(-0.25) * std::sin(t), std::sin(-0.25));
    }
    return nodes;
  }());

  ConvergenceOptions<double> opts;
  opts.replicates = 3;
  opts.grid_count = 15;
  opts.max_length = 0.5;
  const std::vector<double> schedule{0.06, 0.02};
  const auto rows = convergence_experiment(
      S2, make_curve_distribution(pop1, 0.05, 100),
      make_curve_distribution(pop2, 0.05, 200), 0.15, schedule, 4000, opts);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].sd == 0.06);
  CHECK(rows[1].sd == 0.02);
  CHECK(rows[1].flow_error < rows[0].flow_error + 2.0 * rows[0].flow_se);
  CHECK(rows[0].flow_error > 0.0);
  CHECK(rows[0].boundary_error >= 0.0);

  const std::vector<double> bad{0.02, 0.06};
  CHECK_THROWS_AS(
      convergence_experiment(S2, make_curve_distribution(pop1, 0.05, 100),
                             make_curve_distribution(pop2, 0.05, 200), 0.15,
                             bad, 1000, opts),
      std::invalid_argument);
}
