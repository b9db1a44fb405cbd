#pragma once

// Construction of dual-feasible points via dual scaling, and of safe
// spheres certified to contain the dual optimum.

#include "slopescreen/core.hpp"

namespace slopescreen {

/// Sphere in dual space certified (by construction) to contain the dual
/// optimum.
struct SafeSphere {
  VectorXd center;
  double radius = 0.0;
};

namespace detail {

// Scaling factors from already-sorted |A^T z|; callers that sort once per
// round (the gap evaluation shares its sort with screening) use these
// directly.
inline double beta_full_sorted(const VectorXd& v_sorted, double lambda, const Weights& w) {
  double best = 1.0;
  double acc = 0.0;
  for (int q = 0; q < w.size(); ++q) {
    acc += v_sorted[q];
    best = std::max(best, acc / (lambda * w.cumulative(q)));
  }
  return best;
}

inline double beta_max_sorted(const VectorXd& v_sorted, double lambda, const Weights& w) {
  double best = 1.0;
  for (int k = 0; k < w.size(); ++k) {
    if (w[k] == 0.0) {
      if (v_sorted[k] > 0.0)
        throw config_error(
            "beta_max: zero weight against nonzero correlation; per-rank scaling "
            "is undefined, use the cumulative scaling (beta_full)");
      continue;
    }
    best = std::max(best, v_sorted[k] / (lambda * w[k]));
  }
  return best;
}

}  // namespace detail

/// Cumulative dual scaling: smallest factor beta >= 1 such that z / beta
/// satisfies every cumulative dual constraint. `atz` is A^T z.
inline double beta_full(const VectorXd& atz, double lambda, const Weights& w) {
  detail::require(atz.size() == w.size(), "beta_full: length mismatch");
  detail::require(lambda > 0.0, "beta_full: lambda must be positive");
  return detail::beta_full_sorted(detail::abs_sorted_desc(atz), lambda, w);
}

/// Per-rank dual scaling: max over ranks of |A^T z|_[k] / (lambda * w_k).
/// Both sequences are sorted decreasing, so the per-rank ratio dominates
/// the cumulative one and the scaled point is feasible as well. Undefined
/// when a weight is zero against a nonzero correlation; that combination is
/// rejected (use beta_full instead).
inline double beta_max(const VectorXd& atz, double lambda, const Weights& w) {
  detail::require(atz.size() == w.size(), "beta_max: length mismatch");
  detail::require(lambda > 0.0, "beta_max: lambda must be positive");
  return detail::beta_max_sorted(detail::abs_sorted_desc(atz), lambda, w);
}

enum class ScalingVariant { full, max };

/// Dual point plus the byproducts the caller usually needs next: the scaled
/// correlations A^T u (shared with screening) and the scaling factor.
struct ScaledDual {
  DualPoint u;
  VectorXd atu;  // A^T u, cached: screening reuses it as |A^T c|
  double beta;
};

/// Scales an already-computed residual into the dual feasible set.
/// `atz` must equal A^T z.
inline ScaledDual scale_residual(const VectorXd& z, const VectorXd& atz, double lambda,
                                 const Weights& w, ScalingVariant variant) {
  double beta =
      variant == ScalingVariant::full ? beta_full(atz, lambda, w) : beta_max(atz, lambda, w);
  return ScaledDual{DualPoint::trusted(z / beta), atz / beta, beta};
}

/// u = (y - A x) / beta(y - A x); feasible by construction.
inline ScaledDual make_scaled_dual(const ProblemInstance& p, const VectorXd& x,
                                   ScalingVariant variant) {
  detail::require(x.size() == p.n(), "make_dual_point: length mismatch");
  VectorXd z = p.y() - p.dict().matrix() * x;
  VectorXd atz = p.dict().matrix().transpose() * z;
  return scale_residual(z, atz, p.lambda(), p.weights(), variant);
}

inline DualPoint make_dual_point(const ProblemInstance& p, const VectorXd& x,
                                 ScalingVariant variant = ScalingVariant::full) {
  return make_scaled_dual(p, x, variant).u;
}

/// Sphere centered at the feasible dual point with radius
///   r0 + sqrt(2 * gap(x, u)).
/// The quadratic loss makes the dual objective 1-strongly concave, so the
/// generic 2/zeta factor is instantiated at zeta = 1. r0 >= 0 is an
/// optional inflation.
inline SafeSphere make_gap_sphere(const ProblemInstance& p, const VectorXd& x, const DualPoint& u,
                                  double r0 = 0.0) {
  detail::require(r0 >= 0.0, "make_gap_sphere: r0 must be nonnegative");
  Objectives obj = objectives(p, x, u);
  return SafeSphere{u.vector(), r0 + std::sqrt(2.0 * obj.gap)};
}

}  // namespace slopescreen
