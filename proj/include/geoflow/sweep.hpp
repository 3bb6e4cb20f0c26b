#pragma once

#include <atomic>
#include <cstdlib>
#include <limits>
#include <span>
#include <type_traits>
#include <string>
#include <thread>
#include <vector>

#include "geoflow/classify.hpp"
#include "geoflow/io.hpp"
#include "geoflow/principal_flow.hpp"

namespace geoflow {

/// One (h1, h2) cell of a locality-parameter sweep.
template <typename Scalar>
struct SweepCell {
  Scalar h1;
  Scalar h2;
  int misses1 = -1;
  int misses2 = -1;
  Scalar rate = std::numeric_limits<Scalar>::quiet_NaN();
  std::string status;  // "ok" or the failure that hit this cell
};

template <typename Scalar>
struct SweepParams {
  Scalar step_fraction = Scalar(0.2);  // flow step = h * step_fraction
  Scalar delta = Scalar(0.01);
  Scalar eps = Scalar(0.05);
  Scalar flow_max_length = Scalar(4);
  Scalar boundary_max_length = Scalar(4);
  Scalar alpha = Scalar(1);
  Scalar beta = Scalar(1);
  Scalar tie_tol = Scalar(1e-6);
  BoundaryParams<Scalar> boundary{};
  int threads = 0;  // 0: GEOFLOW_THREADS env var, else hardware concurrency
};

inline int resolve_thread_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("GEOFLOW_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

/// Runs every (h1, h2) combination: build both flows, trace the boundary,
/// classify both training clouds and record the per-class misses. A failure
/// marks the cell's status instead of aborting the grid; a failed boundary
/// trace is recorded while the margin-rule classification still counts.
template <typename Scalar>
std::vector<SweepCell<Scalar>> sweep(
    const Manifold<Scalar>& m, const Dataset<Scalar>& class1,
    const Dataset<Scalar>& class2, std::type_identity_t<std::span<const Scalar>> h1_grid,
    std::type_identity_t<std::span<const Scalar>> h2_grid, const SweepParams<Scalar>& params = {}) {
  if (h1_grid.empty() || h2_grid.empty()) {
    throw std::invalid_argument("sweep: empty grid");
  }
  std::vector<SweepCell<Scalar>> cells(h1_grid.size() * h2_grid.size());
  std::vector<int> truth;
  truth.reserve(class1.points.size() + class2.points.size());
  truth.insert(truth.end(), class1.points.size(), 1);
  truth.insert(truth.end(), class2.points.size(), -1);
  std::vector<ManifoldPoint<Scalar>> all_points = class1.points;
  all_points.insert(all_points.end(), class2.points.begin(),
                    class2.points.end());

  const auto run_cell = [&](std::size_t idx) {
    const Scalar h1 = h1_grid[idx / h2_grid.size()];
    const Scalar h2 = h2_grid[idx % h2_grid.size()];
    SweepCell<Scalar>& cell = cells[idx];
    cell.h1 = h1;
    cell.h2 = h2;
    try {
      const FlowResult<Scalar> flow1 = principal_flow<Scalar>(
          m, class1.points, h1, std::nullopt, h1 * params.step_fraction,
          params.flow_max_length);
      const FlowResult<Scalar> flow2 = principal_flow<Scalar>(
          m, class2.points, h2, std::nullopt, h2 * params.step_fraction,
          params.flow_max_length);

      std::string boundary_note = "ok";
      try {
        const auto boundary =
            trace_boundary(m, flow1, flow2, params.delta, params.eps,
                           params.boundary_max_length, params.boundary);
        if (boundary.forward.reason ==
                BoundaryTermination::Reason::no_convergence ||
            boundary.backward.reason ==
                BoundaryTermination::Reason::no_convergence) {
          boundary_note = "boundary:no_convergence";
        }
      } catch (const Error& e) {
        boundary_note = "boundary:" + e.name();
      }

      const ClassModel<Scalar> model1{1, class1.points, flow1};
      const ClassModel<Scalar> model2{-1, class2.points, flow2};
      const auto decisions = label_grid<Scalar>(
          m, all_points, model1, model2, params.alpha, params.beta,
          params.tie_tol);
      int miss1 = 0, miss2 = 0;
      for (std::size_t i = 0; i < decisions.size(); ++i) {
        const auto& d = decisions[i];
        const bool has_label =
            d.kind == Decision<Scalar>::Kind::assigned ||
            d.kind == Decision<Scalar>::Kind::overlap_resolved;
        if (!has_label || d.label != truth[i]) {
          (truth[i] == 1 ? miss1 : miss2)++;
        }
      }
      cell.misses1 = miss1;
      cell.misses2 = miss2;
      cell.rate = Scalar(miss1 + miss2) / Scalar(truth.size());
      cell.status = boundary_note;
    } catch (const Error& e) {
      cell.status = e.name() + std::string(": ") + e.what();
    } catch (const std::exception& e) {
      cell.status = std::string("error: ") + e.what();
    }
  };

  const int threads = std::min<int>(resolve_thread_count(params.threads),
                                    static_cast<int>(cells.size()));
  if (threads <= 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) run_cell(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&]() {
        for (std::size_t i = next.fetch_add(1); i < cells.size();
             i = next.fetch_add(1)) {
          run_cell(i);
        }
      });
    }
    for (auto& th : pool) th.join();
  }
  return cells;
}

/// First cell with the minimal rate among the cells that produced counts.
template <typename Scalar>
const SweepCell<Scalar>* best_cell(std::type_identity_t<std::span<const SweepCell<Scalar>>> cells) {
  const SweepCell<Scalar>* best = nullptr;
  for (const auto& c : cells) {
    if (c.misses1 < 0) continue;
    if (best == nullptr || c.rate < best->rate) best = &c;
  }
  return best;
}

template <typename Scalar>
void emit_sweep_table(std::type_identity_t<std::span<const SweepCell<Scalar>>> cells,
                      const std::string& path) {
  auto out = io_detail::open_out(path);
  out << "h1,h2,misses1,misses2,rate,status\n";
  for (const auto& c : cells) {
    out << io_detail::fmt(double(c.h1)) << "," << io_detail::fmt(double(c.h2))
        << "," << c.misses1 << "," << c.misses2 << ","
        << io_detail::fmt(double(c.rate)) << "," << c.status << "\n";
  }
  if (!out) throw IOError("write failed for " + path);
}

}  // namespace geoflow
