#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <type_traits>
#include <string>
#include <utility>
#include <vector>

#include "geoflow/boundary.hpp"
#include "geoflow/principal_flow.hpp"

namespace geoflow {

/// A labeled point cloud with its principal flow; the unit of classification.
template <typename Scalar>
struct ClassModel {
  int label;  // +1 or -1
  std::vector<ManifoldPoint<Scalar>> cloud;
  FlowResult<Scalar> flow;
};

/// Margin-based distance of p to a class, clamped at zero: zero means p
/// falls inside the class's spread tube.
template <typename Scalar>
Scalar class_distance(const Manifold<Scalar>& m, const ManifoldPoint<Scalar>& p,
                      const ClassModel<Scalar>& model,
                      Scalar tol_proj = Scalar(1e-6)) {
  return std::max(Scalar(0), margin(m, p, model.flow, tol_proj));
}

/// Relative gap R = d(p, flow)^alpha / sigma^beta, the adherence score used
/// inside overlap regions (smaller means closer adherence).
template <typename Scalar>
Scalar relative_gap(const Manifold<Scalar>& m, const ManifoldPoint<Scalar>& p,
                    const ClassModel<Scalar>& model, Scalar alpha = Scalar(1),
                    Scalar beta = Scalar(1), Scalar tol_proj = Scalar(1e-6)) {
  const auto proj = project_to_curve(m, p, model.flow.curve, tol_proj);
  const Scalar sigma = spread_at_projection(model.flow, proj);
  if (!(sigma > Scalar(0))) {
    throw ZeroSpreadError("relative_gap: spread at the projection is zero");
  }
  if (proj.distance == Scalar(0)) return Scalar(0);
  return std::pow(proj.distance, alpha) / std::pow(sigma, beta);
}

/// Outcome of the three-case rule; r1/r2 are present only in the overlap
/// case (both clamped distances zero).
template <typename Scalar>
struct Decision {
  enum class Kind { assigned, boundary, overlap_resolved, failed };
  Kind kind;
  int label;  // +1, -1, or 0 for boundary/failed
  Scalar d1;
  Scalar d2;
  std::optional<Scalar> r1;
  std::optional<Scalar> r2;
  std::string note;
};

/// Rule 1: strictly nearer class wins. Rule 2: equal nonzero distances put
/// p on the boundary. Rule 3: both distances zero resolves by the smaller
/// relative gap; an equal-gap tie is a boundary call as well.
template <typename Scalar>
Decision<Scalar> classify_point(const Manifold<Scalar>& m,
                                const ManifoldPoint<Scalar>& p,
                                const ClassModel<Scalar>& m1,
                                const ClassModel<Scalar>& m2,
                                Scalar alpha = Scalar(1), Scalar beta = Scalar(1),
                                Scalar tie_tol = Scalar(1e-6),
                                Scalar tol_proj = Scalar(1e-6)) {
  using D = Decision<Scalar>;
  const Scalar d1 = class_distance(m, p, m1, tol_proj);
  const Scalar d2 = class_distance(m, p, m2, tol_proj);
  if (d1 == Scalar(0) && d2 == Scalar(0)) {
    const Scalar r1 = relative_gap(m, p, m1, alpha, beta, tol_proj);
    const Scalar r2 = relative_gap(m, p, m2, alpha, beta, tol_proj);
    if (std::abs(r1 - r2) <= tie_tol) {
      return D{D::Kind::boundary, 0, d1, d2, r1, r2, {}};
    }
    const int label = (r1 < r2) ? m1.label : m2.label;
    return D{D::Kind::overlap_resolved, label, d1, d2, r1, r2, {}};
  }
  if (std::abs(d1 - d2) <= tie_tol) {
    return D{D::Kind::boundary, 0, d1, d2, std::nullopt, std::nullopt, {}};
  }
  const int label = (d1 < d2) ? m1.label : m2.label;
  return D{D::Kind::assigned, label, d1, d2, std::nullopt, std::nullopt, {}};
}

/// Element-wise classification of a mesh; per-point failures are recorded
/// in the decision list instead of aborting the grid.
template <typename Scalar>
std::vector<Decision<Scalar>> label_grid(
    const Manifold<Scalar>& m, std::type_identity_t<std::span<const ManifoldPoint<Scalar>>> mesh,
    const ClassModel<Scalar>& m1, const ClassModel<Scalar>& m2,
    Scalar alpha = Scalar(1), Scalar beta = Scalar(1),
    Scalar tie_tol = Scalar(1e-6), Scalar tol_proj = Scalar(1e-6)) {
  std::vector<Decision<Scalar>> out;
  out.reserve(mesh.size());
  for (const auto& p : mesh) {
    try {
      out.push_back(classify_point(m, p, m1, m2, alpha, beta, tie_tol, tol_proj));
    } catch (const Error& e) {
      out.push_back(Decision<Scalar>{Decision<Scalar>::Kind::failed, 0,
                                     Scalar(0), Scalar(0), std::nullopt,
                                     std::nullopt,
                                     e.name() + std::string(": ") + e.what()});
    }
  }
  return out;
}

/// Misclassification count against ground truth. Boundary (and failed)
/// decisions have no usable label and count as misses for their true class.
template <typename Scalar>
std::pair<Scalar, std::pair<int, int>> error_rate(
    std::type_identity_t<std::span<const Decision<Scalar>>> decisions, std::span<const int> truth) {
  if (decisions.size() != truth.size()) {
    throw LengthMismatchError(
        "error_rate: decisions and truth have different lengths");
  }
  int miss_pos = 0, miss_neg = 0;
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    if (truth[i] != 1 && truth[i] != -1) {
      throw std::invalid_argument("error_rate: truth labels must be +1 or -1");
    }
    const auto& d = decisions[i];
    const bool has_label = d.kind == Decision<Scalar>::Kind::assigned ||
                           d.kind == Decision<Scalar>::Kind::overlap_resolved;
    const bool miss = !has_label || d.label != truth[i];
    if (miss) (truth[i] == 1 ? miss_pos : miss_neg)++;
  }
  const Scalar rate =
      Scalar(miss_pos + miss_neg) / Scalar(decisions.size());
  return {rate, {miss_pos, miss_neg}};
}

}  // namespace geoflow
