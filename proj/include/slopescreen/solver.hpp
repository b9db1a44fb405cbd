#pragma once

// Accelerated proximal-gradient solver with optional interleaved safe
// screening. Every screen_every iterations the current residual is scaled
// into the dual feasible set, the duality gap certifies a safe sphere, the
// configured test screens atoms, and the problem shrinks accordingly.
// Momentum carries across reductions (iterate and momentum point are
// restricted to the surviving coordinates); restart-on-reduction is
// available behind an option but measurably degrades accuracy under tight
// time budgets when screening trickles a few atoms per round. The step
// size keeps the original Lipschitz estimate (a valid upper bound for any
// column submatrix).

#include "slopescreen/core.hpp"
#include "slopescreen/dual.hpp"
#include "slopescreen/rng.hpp"
#include "slopescreen/screening.hpp"

#include <array>
#include <chrono>
#include <limits>
#include <optional>

namespace slopescreen {

struct LipschitzEstimate {
  double value;
  bool fallback;  // true when power iteration failed and the Frobenius bound was used
};

namespace detail {

inline LipschitzEstimate power_iteration_sq_norm(const Eigen::Ref<const MatrixXd>& a,
                                                 double rel_tol, int max_iters) {
  Rng rng(0x11d5eed);
  VectorXd v(a.cols());
  for (Eigen::Index j = 0; j < v.size(); ++j) v[j] = rng.gaussian();
  v.normalize();

  double estimate = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    VectorXd av = a * v;
    double rayleigh = av.squaredNorm();  // v has unit norm
    VectorXd atav = a.transpose() * av;
    double norm = atav.norm();
    if (norm == 0.0) {
      // start landed in the kernel; re-draw
      for (Eigen::Index j = 0; j < v.size(); ++j) v[j] = rng.gaussian();
      v.normalize();
      continue;
    }
    if (it > 0 && std::abs(rayleigh - estimate) <= rel_tol * rayleigh)
      return LipschitzEstimate{1.01 * rayleigh, false};
    estimate = rayleigh;
    v = atav / norm;
  }
  return LipschitzEstimate{a.squaredNorm(), true};  // Frobenius upper bound
}

}  // namespace detail

/// Upper bound on the squared spectral norm of A, the gradient Lipschitz
/// constant of the quadratic loss. Power iteration inflated by 1.01 to stay
/// a valid majorization despite estimation error.
inline LipschitzEstimate estimate_lipschitz(const Dictionary& a, double rel_tol = 1e-10,
                                            int max_iters = 5000) {
  return detail::power_iteration_sq_norm(a.matrix(), rel_tol, max_iters);
}

enum class ScreenStrategy { none, r1, rq, all };
enum class ExitReason { tolerance, max_iters, time_budget };

inline const char* exit_reason_name(ExitReason r) {
  switch (r) {
    case ExitReason::tolerance: return "tolerance";
    case ExitReason::max_iters: return "max_iters";
    case ExitReason::time_budget: return "time_budget";
  }
  return "?";
}

struct SolveOptions {
  double gap_tol = 1e-9;
  long max_iters = 1000000;
  std::optional<double> time_budget_s{};
  ScreenStrategy screen_strategy = ScreenStrategy::none;
  int screen_every = 20;
  ScalingVariant scaling_variant = ScalingVariant::full;
  double safety_margin = 0.0;
  bool record_trace = false;
  bool recompute_lipschitz_on_reduce = false;
  // Reset the momentum sequence after every reduction instead of carrying
  // it into the reduced coordinates.
  bool restart_momentum_on_reduce = false;
  // Precomputed gradient-Lipschitz majorizer; skips the power iteration.
  // Benchmark harnesses share it across solvers on the same instance.
  std::optional<double> lipschitz{};
};

struct TraceRow {
  double wall_time_s;
  long iteration;
  double gap;
  int active_dimension;
  double primal;  // diagnostic; not serialized
};

/// The returned pair (x, u) is the best certified one among the gap
/// evaluations, not necessarily the last iterate: the accelerated scheme is
/// non-monotone, so the final iterate can sit on an oscillation peak.
/// `screened` lists the indices certified up to that evaluation.
struct SolveResult {
  VectorXd x;  // original coordinates; exact zeros at screened indices
  DualPoint u;
  double gap;
  long iterations;
  std::vector<int> screened;  // original indices, ascending
  int screened_total;
  std::vector<TraceRow> trace;
  ExitReason exit_reason;
  bool lipschitz_fallback;
  // (primal before, primal after) per reduction, populated with record_trace
  std::vector<std::array<double, 2>> reduction_primal;
};

struct Reduction {
  std::optional<ProblemInstance> problem;  // nullopt iff every column was screened
  std::vector<int> kept;                   // reduced index -> original column index
};

/// Drops screened columns and truncates the weights to the first n' entries
/// (certified zeros occupy the lowest ranks of the sorted solution, so the
/// survivors only ever interact with the leading weights).
inline Reduction reduce_problem(const ProblemInstance& p, const std::vector<int>& screened) {
  const int n = p.n();
  std::vector<bool> drop(static_cast<std::size_t>(n), false);
  for (int j : screened) {
    detail::require(0 <= j && j < n, "reduce_problem: screened index out of range");
    detail::require(!drop[static_cast<std::size_t>(j)], "reduce_problem: duplicate screened index");
    drop[static_cast<std::size_t>(j)] = true;
  }
  Reduction red;
  for (int j = 0; j < n; ++j)
    if (!drop[static_cast<std::size_t>(j)]) red.kept.push_back(j);
  if (red.kept.empty()) return red;

  MatrixXd a(p.m(), static_cast<Eigen::Index>(red.kept.size()));
  for (std::size_t i = 0; i < red.kept.size(); ++i)
    a.col(static_cast<Eigen::Index>(i)) = p.dict().matrix().col(red.kept[i]);
  red.problem.emplace(Dictionary::checked(std::move(a), 1e-9), p.y(), p.lambda(),
                      p.weights().head(static_cast<int>(red.kept.size())));
  return red;
}

/// Re-embeds a reduced solution into n_full coordinates with exact zeros
/// everywhere else.
inline VectorXd embed_solution(const VectorXd& x_reduced, const std::vector<int>& kept,
                               int n_full) {
  detail::require(static_cast<int>(kept.size()) == x_reduced.size(),
                  "embed_solution: kept map length mismatch");
  VectorXd x = VectorXd::Zero(n_full);
  for (std::size_t i = 0; i < kept.size(); ++i) x[kept[i]] = x_reduced[static_cast<Eigen::Index>(i)];
  return x;
}

namespace detail {

inline SolveResult run_solver(const ProblemInstance& p0, const SolveOptions& opts) {
  require(opts.gap_tol > 0.0, "SolveOptions: gap_tol must be positive");
  require(opts.max_iters > 0, "SolveOptions: max_iters must be positive");
  require(opts.screen_every >= 1, "SolveOptions: screen_every must be >= 1");
  require(opts.safety_margin >= 0.0, "SolveOptions: safety_margin must be nonnegative");
  if (opts.time_budget_s) require(*opts.time_budget_s > 0.0, "SolveOptions: empty time budget");
  if (opts.lipschitz) require(*opts.lipschitz > 0.0, "SolveOptions: lipschitz must be positive");

  using clock = std::chrono::steady_clock;
  const auto t_start = clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - t_start).count(); };

  const LipschitzEstimate lip = opts.lipschitz
                                    ? LipschitzEstimate{*opts.lipschitz, false}
                                    : estimate_lipschitz(p0.dict());
  double step_l = lip.value;

  const VectorXd& y = p0.y();
  const double lambda = p0.lambda();
  const int n0 = p0.n();
  const int m = p0.m();
  const bool screening_on = opts.screen_strategy != ScreenStrategy::none;

  // The active problem lives in the leading n_cur columns; reductions
  // compact columns in place, so the loop never reallocates.
  MatrixXd a = p0.dict().matrix();
  int n_cur = n0;
  Weights w = p0.weights();
  std::vector<int> kept(static_cast<std::size_t>(n0));
  std::iota(kept.begin(), kept.end(), 0);
  std::vector<int> screened_all;

  // Monotone accelerated scheme (fixed step 1/L): the prox candidate is
  // kept only when it does not increase the primal objective, which removes
  // the oscillations of the plain accelerated method; the momentum point
  // still advances through the candidate. Products A*x and A*z ride along
  // as linear combinations, so one iteration still costs two mat-vecs; they
  // are recomputed from scratch at every gap evaluation to stop drift.
  VectorXd x = VectorXd::Zero(n0);
  VectorXd z = VectorXd::Zero(n0);
  double momentum = 1.0;
  VectorXd ax = VectorXd::Zero(m);  // A x
  VectorXd az = VectorXd::Zero(m);  // A z
  double primal_x = 0.5 * y.squaredNorm();

  // work buffers
  VectorXd resid(m), a_cand(m), grad(n0), prox_arg(n0);
  SortedCorrelations center;  // sorted |A^T u| of the last evaluation

  std::vector<TraceRow> trace;
  std::vector<std::array<double, 2>> reduction_primal;
  long iter = 0;
  ExitReason reason = ExitReason::max_iters;
  bool reason_set = false;

  double gap = std::numeric_limits<double>::infinity();
  double primal = std::numeric_limits<double>::infinity();

  // best certified primal iterate and best dual bound seen so far (the
  // candidate stream keeps moving even when the monotone iterate pauses,
  // so its residuals are scaled as well and often carry the tighter bound)
  double best_gap = std::numeric_limits<double>::infinity();
  VectorXd best_x;
  std::vector<int> best_screened;
  double best_dual = -std::numeric_limits<double>::infinity();
  VectorXd best_dual_u;
  bool have_cand = false;

  auto scaled_dual_value = [&](const VectorXd& r, const VectorXd& v_sorted) {
    double beta = opts.scaling_variant == ScalingVariant::full
                      ? detail::beta_full_sorted(v_sorted, lambda, w)
                      : detail::beta_max_sorted(v_sorted, lambda, w);
    double dual = 0.5 * y.squaredNorm() - 0.5 * (y - r / beta).squaredNorm();
    if (dual > best_dual) {
      best_dual = dual;
      best_dual_u = r / beta;
    }
    return std::pair<double, double>{dual, beta};
  };

  auto evaluate = [&] {
    auto acols = a.leftCols(n_cur);
    ax.noalias() = acols * x.head(n_cur);  // fresh products: no drift in the certificate
    az.noalias() = acols * z.head(n_cur);
    resid = y - ax;
    VectorXd atr = acols.transpose() * resid;
    // one sort serves the scaling factor and the screening tests
    center = sort_correlations(atr);
    auto [dual, beta] = scaled_dual_value(resid, center.v);
    center.v /= beta;
    primal = 0.5 * resid.squaredNorm() + lambda * slope_norm(x.head(n_cur), w);
    primal_x = primal;
    if (have_cand) {
      // dual bound from the latest candidate's residual
      VectorXd r_cand = y - a_cand;
      VectorXd atr_cand = acols.transpose() * r_cand;
      scaled_dual_value(r_cand, detail::abs_sorted_desc(atr_cand));
    }
    gap = std::max(0.0, primal - dual);
    trace.push_back(TraceRow{elapsed(), iter, gap, n_cur, primal});
    if (gap < best_gap) {
      best_gap = gap;
      VectorXd x_head = x.head(n_cur);
      best_x = embed_solution(x_head, kept, n0);
      best_screened = screened_all;
    }
  };

  evaluate();
  if (gap <= opts.gap_tol) {
    reason = ExitReason::tolerance;
    reason_set = true;
  }

  while (!reason_set && iter < opts.max_iters) {
    if (opts.time_budget_s && elapsed() >= *opts.time_budget_s) {
      reason = ExitReason::time_budget;
      reason_set = true;
      break;
    }
    ++iter;

    auto acols = a.leftCols(n_cur);
    resid = az - y;
    grad.head(n_cur).noalias() = acols.transpose() * resid;
    prox_arg.resize(n_cur);
    prox_arg = z.head(n_cur) - grad.head(n_cur) / step_l;
    VectorXd cand = prox_sorted_l1(prox_arg, 1.0 / step_l, lambda, w);
    a_cand.noalias() = acols * cand;
    have_cand = true;
    double primal_cand =
        0.5 * (y - a_cand).squaredNorm() + lambda * slope_norm(cand, w);

    double momentum_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    double c1 = momentum / momentum_new;
    double c2 = (momentum - 1.0) / momentum_new;
    // roundoff slack: at the numerical floor the objective comparison is
    // meaningless and the iterate must stay free to drift with the dual
    const double slack = 4e-16 * (1.0 + std::abs(primal_x));
    if (primal_cand <= primal_x + slack) {
      // accepted candidate: classic accelerated update
      z.head(n_cur) = cand + c2 * (cand - x.head(n_cur));
      az = a_cand + c2 * (a_cand - ax);
      x.head(n_cur) = cand;
      ax = a_cand;
      primal_x = primal_cand;
    } else {
      // keep the previous iterate; the momentum point still moves through
      // the rejected candidate
      z.head(n_cur) = x.head(n_cur) + c1 * (cand - x.head(n_cur));
      az = ax + c1 * (a_cand - ax);
    }
    momentum = momentum_new;

    const bool cadence = (iter % opts.screen_every == 0);
    if (!cadence && !opts.record_trace) continue;

    evaluate();
    if (gap <= opts.gap_tol) {
      reason = ExitReason::tolerance;
      reason_set = true;
      break;
    }
    if (!screening_on || !cadence) continue;

    const double radius = std::sqrt(2.0 * gap);
    std::vector<bool> pass;
    switch (opts.screen_strategy) {
      case ScreenStrategy::r1:
        pass = test_r1(center, lambda, w, radius, opts.safety_margin);
        break;
      case ScreenStrategy::rq:
        pass = test_rq(center, lambda, w, radius, opts.safety_margin);
        break;
      case ScreenStrategy::all: {
        ScreenOutcome out = screen_all_fast(center, lambda, w, radius, opts.safety_margin);
        pass.assign(static_cast<std::size_t>(n_cur), false);
        for (int j : out.screened) pass[static_cast<std::size_t>(j)] = true;
        break;
      }
      case ScreenStrategy::none: break;
    }
    int n_pass = static_cast<int>(std::count(pass.begin(), pass.end(), true));
    if (n_pass == 0) continue;

    const double primal_before = primal;
    // compact the surviving columns (plus iterate and momentum point) left
    int dst = 0;
    for (int src = 0; src < n_cur; ++src) {
      if (pass[static_cast<std::size_t>(src)]) {
        screened_all.push_back(kept[static_cast<std::size_t>(src)]);
        continue;
      }
      if (dst != src) {
        a.col(dst) = a.col(src);
        x[dst] = x[src];
        z[dst] = z[src];
        kept[static_cast<std::size_t>(dst)] = kept[static_cast<std::size_t>(src)];
      }
      ++dst;
    }
    n_cur = dst;
    kept.resize(static_cast<std::size_t>(n_cur));
    if (n_cur == 0) {
      if (opts.record_trace)
        reduction_primal.push_back({primal_before, 0.5 * y.squaredNorm()});
      break;
    }
    w = p0.weights().head(n_cur);
    if (opts.recompute_lipschitz_on_reduce)
      step_l = power_iteration_sq_norm(a.leftCols(n_cur), 1e-10, 5000).value;

    if (opts.restart_momentum_on_reduce) {
      z.head(n_cur) = x.head(n_cur);
      momentum = 1.0;
    }
    // refresh the cached products and objective on the reduced problem
    ax.noalias() = a.leftCols(n_cur) * x.head(n_cur);
    az.noalias() = a.leftCols(n_cur) * z.head(n_cur);
    primal_x = 0.5 * (y - ax).squaredNorm() + lambda * slope_norm(x.head(n_cur), w);
    if (opts.record_trace) reduction_primal.push_back({primal_before, primal_x});
  }

  // Definitive certificate on the original problem: primal side from
  // whichever of the last and the best evaluated iterate is better, dual
  // side from the best bound seen, rescaled to full-problem feasibility.
  VectorXd x_head = x.head(n_cur);
  VectorXd x_full = embed_solution(x_head, kept, n0);
  ScaledDual final_sd = make_scaled_dual(p0, x_full, opts.scaling_variant);
  Objectives obj = objectives(p0, x_full, final_sd.u);
  std::vector<int> screened_result = screened_all;
  if (best_gap < obj.gap && best_x.size() == n0) {
    ScaledDual best_sd = make_scaled_dual(p0, best_x, opts.scaling_variant);
    Objectives best_obj = objectives(p0, best_x, best_sd.u);
    if (best_obj.gap < obj.gap) {
      x_full = best_x;
      final_sd = std::move(best_sd);
      obj = best_obj;
      screened_result = best_screened;
    }
  }
  if (best_dual > obj.dual && best_dual_u.size() == m) {
    // duals collected on reduced problems may violate constraints of
    // dropped atoms; rescale against the full dictionary before use
    VectorXd atu_best = p0.dict().matrix().transpose() * best_dual_u;
    double beta = beta_full(atu_best, lambda, p0.weights());
    VectorXd u_rescaled = best_dual_u / beta;
    double dual_rescaled = dual_objective(p0, u_rescaled);
    if (dual_rescaled > obj.dual) {
      final_sd.u = DualPoint::trusted(std::move(u_rescaled));
      obj.dual = dual_rescaled;
      obj.gap = std::max(0.0, obj.primal - obj.dual);
    }
  }
  if (obj.gap <= opts.gap_tol && !reason_set) reason = ExitReason::tolerance;
  trace.push_back(
      TraceRow{elapsed(), iter, obj.gap, static_cast<int>(kept.size()), obj.primal});

  std::sort(screened_result.begin(), screened_result.end());
  return SolveResult{std::move(x_full),
                     std::move(final_sd.u),
                     obj.gap,
                     iter,
                     std::move(screened_result),
                     0,
                     std::move(trace),
                     reason,
                     lip.fallback,
                     std::move(reduction_primal)};
}

}  // namespace detail

/// Plain accelerated proximal-gradient solve (no screening).
inline SolveResult solve(const ProblemInstance& p, const SolveOptions& opts = {}) {
  detail::require(opts.screen_strategy == ScreenStrategy::none,
                  "solve: screening requested; use solve_with_screening");
  SolveResult res = detail::run_solver(p, opts);
  res.screened_total = static_cast<int>(res.screened.size());
  return res;
}

/// Accelerated proximal-gradient solve with the configured screening
/// strategy interleaved every screen_every iterations. With strategy none
/// this is exactly solve().
inline SolveResult solve_with_screening(const ProblemInstance& p, const SolveOptions& opts) {
  SolveResult res = detail::run_solver(p, opts);
  res.screened_total = static_cast<int>(res.screened.size());
  return res;
}

}  // namespace slopescreen
