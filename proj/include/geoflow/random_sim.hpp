#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <type_traits>
#include <sstream>
#include <vector>

#include "geoflow/boundary.hpp"
#include "geoflow/curve.hpp"
#include "geoflow/frechet.hpp"
#include "geoflow/principal_flow.hpp"

namespace geoflow {

/// Uniform and Gaussian draws mapped explicitly from the mt19937_64 stream,
/// so that equal seeds give bit-identical samples on every platform.
namespace rng {

inline double uniform01(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;  // [0, 1)
}

inline double normal01(std::mt19937_64& g) {
  const double u1 = (static_cast<double>(g() >> 11) + 1.0) * 0x1.0p-53;  // (0,1]
  const double u2 = uniform01(g);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * 3.14159265358979323846 * u2);
}

}  // namespace rng

/// Random distribution along a population curve: arc position uniform in
/// length, offset Gaussian along the in-tangent normal of the curve.
template <typename Scalar>
struct CurveDistribution {
  Curve<Scalar> population;
  std::vector<Scalar> normal_sd;  // per node, interpolated along segments
  std::uint64_t seed;
};

template <typename Scalar>
CurveDistribution<Scalar> make_curve_distribution(Curve<Scalar> population,
                                                  Scalar constant_sd,
                                                  std::uint64_t seed) {
  if (constant_sd < Scalar(0)) {
    throw std::invalid_argument("make_curve_distribution: sd must be >= 0");
  }
  const std::size_t n = population.size();
  return CurveDistribution<Scalar>{std::move(population),
                                   std::vector<Scalar>(n, constant_sd), seed};
}

namespace detail {

template <typename Scalar>
Scalar sd_at(const CurveDistribution<Scalar>& dist, std::size_t seg, Scalar f) {
  if (dist.population.size() == 1) return dist.normal_sd[0];
  return (Scalar(1) - f) * dist.normal_sd[seg] + f * dist.normal_sd[seg + 1];
}

// Unit tangent of the segment at an interpolated point.
template <typename Scalar>
Vec3<Scalar> segment_tangent(const Manifold<Scalar>& m, const Curve<Scalar>& c,
                             std::size_t seg, const ManifoldPoint<Scalar>& q) {
  const TangentVector<Scalar> fwd = m.log_map(q, c.node(seg + 1));
  if (fwd.norm() > Scalar(1e-12)) return fwd.vec() / fwd.norm();
  const TangentVector<Scalar> back = m.log_map(q, c.node(seg));
  return -back.vec() / back.norm();
}

}  // namespace detail

/// Draws n points: t uniform in arc length, then a Gaussian offset along
/// the unit normal direction inside the tangent plane, mapped through exp.
/// Reproducible: the draw sequence is fixed by the seed.
template <typename Scalar>
std::vector<ManifoldPoint<Scalar>> sample_along_curve(
    const Manifold<Scalar>& m, const CurveDistribution<Scalar>& dist,
    std::size_t n) {
  if (n == 0) {
    throw std::invalid_argument("sample_along_curve: n must be >= 1");
  }
  std::mt19937_64 gen(dist.seed);
  const Curve<Scalar>& pop = dist.population;
  std::vector<ManifoldPoint<Scalar>> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Scalar t = Scalar(rng::uniform01(gen)) * pop.total_length();
    const Scalar z = Scalar(rng::normal01(gen));
    const auto [seg, f] = pop.locate(t);
    const ManifoldPoint<Scalar> q = pop.point_at(m, t);
    if (pop.size() == 1) {
      out.push_back(q);
      continue;
    }
    const Vec3<Scalar> tangent = detail::segment_tangent(m, pop, seg, q);
    const Vec3<Scalar> normal = m.surface_normal(q).cross(tangent).normalized();
    const Scalar offset = detail::sd_at(dist, seg, f) * z;
    out.push_back(m.exp_map(q, TangentVector<Scalar>(q, offset * normal)));
  }
  return out;
}

/// Monte-Carlo estimate of the continuous principal flow: at every grid
/// position, the Fréchet mean of the samples landing in the neighborhood
/// of the population point.
template <typename Scalar>
Curve<Scalar> continuous_flow_estimate(const Manifold<Scalar>& m,
                                       const CurveDistribution<Scalar>& dist,
                                       Scalar h, std::type_identity_t<std::span<const Scalar>> t_grid,
                                       std::size_t n_mc) {
  const std::vector<ManifoldPoint<Scalar>> samples =
      sample_along_curve(m, dist, n_mc);
  std::vector<ManifoldPoint<Scalar>> nodes;
  nodes.reserve(t_grid.size());
  for (std::size_t gi = 0; gi < t_grid.size(); ++gi) {
    const ManifoldPoint<Scalar> q = dist.population.point_at(m, t_grid[gi]);
    std::vector<ManifoldPoint<Scalar>> members;
    for (const auto& s : samples) {
      if (m.geodesic_distance(q, s) <= h) members.push_back(s);
    }
    if (members.empty()) {
      std::ostringstream msg;
      msg << "continuous_flow_estimate: no sample within h of grid point "
          << gi;
      throw EmptyNeighborhoodError(msg.str());
    }
    nodes.push_back(frechet_mean<Scalar>(m, members));
  }
  return Curve<Scalar>(m, dedup_nodes(m, nodes));
}

template <typename Scalar>
struct ConvergenceRow {
  Scalar sd;
  Scalar flow_error;
  Scalar flow_se;
  Scalar boundary_error;
  Scalar boundary_se;
};

template <typename Scalar>
struct ConvergenceOptions {
  int replicates = 8;
  int grid_count = 25;
  Scalar delta = Scalar(0.01);
  Scalar eps = Scalar(0.05);
  Scalar max_length = Scalar(10);
  BoundaryParams<Scalar> boundary{};
};

/// Shrinking-noise experiment: for each sd in a decreasing schedule,
/// estimate both continuous flows, trace their boundary, and report the
/// flow and boundary deviations from the population objects with Monte-
/// Carlo standard errors. Replicate seeds are the distribution seed plus
/// the replicate index.
template <typename Scalar>
std::vector<ConvergenceRow<Scalar>> convergence_experiment(
    const Manifold<Scalar>& m, const CurveDistribution<Scalar>& dist1,
    const CurveDistribution<Scalar>& dist2, Scalar h,
    std::type_identity_t<std::span<const Scalar>> sd_schedule, std::size_t n_mc,
    const ConvergenceOptions<Scalar>& opts = {}) {
  for (std::size_t i = 1; i < sd_schedule.size(); ++i) {
    if (!(sd_schedule[i] < sd_schedule[i - 1])) {
      throw std::invalid_argument(
          "convergence_experiment: sd schedule must be strictly decreasing");
    }
  }

  const auto grid_for = [&](const Curve<Scalar>& pop) {
    std::vector<Scalar> g(static_cast<std::size_t>(opts.grid_count));
    for (int i = 0; i < opts.grid_count; ++i) {
      g[static_cast<std::size_t>(i)] =
          pop.total_length() * Scalar(i) / Scalar(opts.grid_count - 1);
    }
    return g;
  };
  const std::vector<Scalar> grid1 = grid_for(dist1.population);
  const std::vector<Scalar> grid2 = grid_for(dist2.population);

  const FlowResult<Scalar> pop_flow1 = flow_from_curve(m, dist1.population, h);
  const FlowResult<Scalar> pop_flow2 = flow_from_curve(m, dist2.population, h);
  const BoundaryResult<Scalar> pop_boundary = trace_boundary(
      m, pop_flow1, pop_flow2, opts.delta, opts.eps, opts.max_length,
      opts.boundary);

  // Largest ambient deviation of the estimate from the population curve;
  // the node-to-curve pairing realizes the one-to-one correspondence.
  const auto flow_deviation = [&](const Curve<Scalar>& est,
                                  const Curve<Scalar>& pop) {
    Scalar worst = Scalar(0);
    for (const auto& node : est.nodes()) {
      const auto proj = project_to_curve(m, node, pop, Scalar(1e-6));
      worst = std::max(worst,
                       Scalar((node.coords() - proj.point.coords()).norm()));
    }
    return worst;
  };

  std::vector<ConvergenceRow<Scalar>> rows;
  rows.reserve(sd_schedule.size());
  for (const Scalar sd : sd_schedule) {
    std::vector<Scalar> flow_errs, boundary_errs;
    for (int rep = 0; rep < opts.replicates; ++rep) {
      CurveDistribution<Scalar> d1 = make_curve_distribution(
          dist1.population, sd, dist1.seed + static_cast<std::uint64_t>(rep));
      CurveDistribution<Scalar> d2 = make_curve_distribution(
          dist2.population, sd, dist2.seed + static_cast<std::uint64_t>(rep));
      const Curve<Scalar> est1 = continuous_flow_estimate(
          m, d1, h, std::span<const Scalar>(grid1), n_mc);
      const Curve<Scalar> est2 = continuous_flow_estimate(
          m, d2, h, std::span<const Scalar>(grid2), n_mc);
      flow_errs.push_back(std::max(flow_deviation(est1, dist1.population),
                                   flow_deviation(est2, dist2.population)));
      const BoundaryResult<Scalar> est_boundary = trace_boundary(
          m, flow_from_curve(m, est1, h), flow_from_curve(m, est2, h),
          opts.delta, opts.eps, opts.max_length, opts.boundary);
      boundary_errs.push_back(
          hausdorff_distance(m, est_boundary.curve, pop_boundary.curve));
    }
    const auto mean_se = [](const std::vector<Scalar>& xs) {
      Scalar mean = Scalar(0);
      for (const Scalar x : xs) mean += x;
      mean /= Scalar(xs.size());
      Scalar var = Scalar(0);
      for (const Scalar x : xs) var += (x - mean) * (x - mean);
      const Scalar se = xs.size() > 1
                            ? std::sqrt(var / Scalar(xs.size() - 1) /
                                        Scalar(xs.size()))
                            : Scalar(0);
      return std::pair<Scalar, Scalar>{mean, se};
    };
    const auto [fm, fse] = mean_se(flow_errs);
    const auto [bm, bse] = mean_se(boundary_errs);
    rows.push_back(ConvergenceRow<Scalar>{sd, fm, fse, bm, bse});
  }
  return rows;
}

}  // namespace geoflow
