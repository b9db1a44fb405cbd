#pragma once

// Safe screening tests for the sorted-L1 penalized least-squares problem.
//
// Given a sphere S(c, R) containing the dual optimum, an atom can be
// certified to carry a zero coefficient in every minimizer when a family of
// inequalities holds. The family is indexed by one parameter r_q in [1, q]
// per constraint index q; two closed-form members (r_q = 1 and r_q = q) are
// provided along with the joint test over every member, evaluated for all
// atoms at once by the threshold-chain recursion. All work happens in the
// coordinate system sorting |A^T c| decreasingly; translation back to
// original column indices happens only at the ScreenOutcome boundary.

#include "slopescreen/core.hpp"
#include "slopescreen/dual.hpp"

namespace slopescreen {

/// |A^T c| sorted decreasingly plus the permutation back to column indices
/// (perm[rank] = original column index; ties broken by ascending index).
struct SortedCorrelations {
  VectorXd v;
  std::vector<int> perm;

  int size() const { return static_cast<int>(v.size()); }
};

inline SortedCorrelations sort_correlations(const VectorXd& correlations) {
  SortedCorrelations sc;
  sc.perm = detail::abs_sort_order(correlations);
  sc.v.resize(correlations.size());
  for (int k = 0; k < correlations.size(); ++k) sc.v[k] = std::abs(correlations[sc.perm[k]]);
  return sc;
}

inline SortedCorrelations sort_correlations(const Dictionary& a, const VectorXd& c) {
  detail::require(c.size() == a.rows(), "sort_correlations: center length mismatch");
  return sort_correlations(a.matrix().transpose() * c);
}

/// kappa(q, r) = lambda * (w_r + ... + w_q) - (q - r + 1) * R, the bound a
/// screened correlation sum must stay strictly below. Ranks are 0-based,
/// 0 <= r <= q < n.
inline double kappa(double lambda, const Weights& w, double radius, int q, int r) {
  detail::require(0 <= r && r <= q && q < w.size(), "kappa: need 0 <= r <= q < n");
  double wsum = w.cumulative(q) - (r > 0 ? w.cumulative(r - 1) : 0.0);
  return lambda * wsum - (q - r + 1) * radius;
}

/// Test with r_q = 1 for every q: atom passes iff for all q
///   |a^T c| + (sum of q-1 largest deleted correlations) < lambda * W_q - q*R.
/// Returns a pass mask in original column index space. O(n^2) overall.
inline std::vector<bool> test_r1(const SortedCorrelations& sc, double lambda, const Weights& w,
                                 double radius, double safety_margin = 0.0) {
  detail::require(radius >= 0.0, "test_r1: radius must be nonnegative");
  detail::require(sc.size() == w.size(), "test_r1: size mismatch");
  const int n = sc.size();
  // prefix[q] = v_0 + ... + v_{q-1}
  std::vector<double> prefix(static_cast<std::size_t>(n) + 1, 0.0);
  for (int k = 0; k < n; ++k) prefix[k + 1] = prefix[k] + sc.v[k];

  std::vector<bool> mask(static_cast<std::size_t>(n), false);
  for (int rank = 0; rank < n; ++rank) {
    bool pass = true;
    for (int q = 0; q < n; ++q) {
      // q-1 largest correlations of the dictionary without this atom
      double deleted = (q <= rank) ? prefix[q] : prefix[q + 1] - sc.v[rank];
      double rhs = lambda * w.cumulative(q) - (q + 1) * radius - safety_margin;
      if (!(sc.v[rank] + deleted < rhs)) {
        pass = false;
        break;
      }
    }
    mask[static_cast<std::size_t>(sc.perm[rank])] = pass;
  }
  return mask;
}

/// Test with r_q = q for every q, which collapses to the single inequality
///   |a^T c| < lambda * w_n - R.
/// Takes raw correlations A^T c (no sorting required). O(n).
inline std::vector<bool> test_rq(const VectorXd& correlations, double lambda, const Weights& w,
                                 double radius, double safety_margin = 0.0) {
  detail::require(radius >= 0.0, "test_rq: radius must be nonnegative");
  detail::require(correlations.size() == w.size(), "test_rq: size mismatch");
  const int n = w.size();
  const double threshold = lambda * w[n - 1] - radius - safety_margin;
  std::vector<bool> mask(static_cast<std::size_t>(n), false);
  for (int j = 0; j < n; ++j) mask[static_cast<std::size_t>(j)] = std::abs(correlations[j]) < threshold;
  return mask;
}

/// Same test on already-sorted correlations.
inline std::vector<bool> test_rq(const SortedCorrelations& sc, double lambda, const Weights& w,
                                 double radius, double safety_margin = 0.0) {
  detail::require(radius >= 0.0, "test_rq: radius must be nonnegative");
  detail::require(sc.size() == w.size(), "test_rq: size mismatch");
  const int n = w.size();
  const double threshold = lambda * w[n - 1] - radius - safety_margin;
  std::vector<bool> mask(static_cast<std::size_t>(n), false);
  for (int rank = 0; rank < n; ++rank)
    mask[static_cast<std::size_t>(sc.perm[static_cast<std::size_t>(rank)])] =
        sc.v[rank] < threshold;
  return mask;
}

/// Argmax tie-breaking for the threshold tables. Thresholds are invariant
/// to the choice (they depend on the argmax value only); `largest` exists to
/// let tests demonstrate exactly that.
enum class TieBreak { smallest, largest };

/// Precomputations of the joint test, all O(n):
///   g[r]      = sum_{k >= r} (lambda * w_k - v_k - R)   (suffix sums)
///   r_star[q] = argmax_{r <= q} g[r]
///   q_star[k] = argmax_{q <= k} (g[q] - lambda * w_q)
/// The threshold for pair (q, r) is then
///   tau(q, r) = g[r] - g[q] + lambda * w_q - R.
struct ThresholdTables {
  VectorXd g;
  std::vector<int> r_star;
  std::vector<int> q_star;
};

inline ThresholdTables build_threshold_tables(const SortedCorrelations& sc, double lambda,
                                              const Weights& w, double radius,
                                              TieBreak tie = TieBreak::smallest) {
  detail::require(radius >= 0.0, "build_threshold_tables: radius must be nonnegative");
  detail::require(sc.size() == w.size(), "build_threshold_tables: size mismatch");
  const int n = sc.size();
  ThresholdTables t;
  t.g.resize(n);
  double acc = 0.0;
  for (int r = n - 1; r >= 0; --r) {
    acc += lambda * w[r] - sc.v[r] - radius;
    t.g[r] = acc;
  }

  t.r_star.resize(static_cast<std::size_t>(n));
  t.q_star.resize(static_cast<std::size_t>(n));
  int best_r = 0;
  int best_q = 0;
  auto better = [tie](double cand, double best) {
    return tie == TieBreak::smallest ? cand > best : cand >= best;
  };
  for (int k = 0; k < n; ++k) {
    if (k > 0 && better(t.g[k], t.g[best_r])) best_r = k;
    t.r_star[static_cast<std::size_t>(k)] = best_r;
    if (k > 0 && better(t.g[k] - lambda * w[k], t.g[best_q] - lambda * w[best_q])) best_q = k;
    t.q_star[static_cast<std::size_t>(k)] = best_q;
  }
  return t;
}

struct AtomCheck {
  bool pass;
  int thresholds_visited;
};

/// Threshold-chain check of the joint test for the atom at sorted rank
/// `rank` (0-based), valid when every larger rank already passed: after
/// discarding those atoms this one attains the smallest correlation of the
/// reduced dictionary, so only the chain q_star[rank], q_star[r_star[.]-1],
/// ... needs checking. Visits at most n thresholds.
inline AtomCheck check_atom(int rank, double v_rank, const ThresholdTables& t, double lambda,
                            const Weights& w, double radius, double safety_margin = 0.0) {
  detail::require(0 <= rank && rank < w.size(), "check_atom: rank out of range");
  int q = t.q_star[static_cast<std::size_t>(rank)];
  int visited = 0;
  while (true) {
    ++visited;
    int r = t.r_star[static_cast<std::size_t>(q)];
    double tau = t.g[r] - t.g[q] + lambda * w[q] - radius - safety_margin;
    if (!(v_rank < tau)) return AtomCheck{false, visited};
    if (r > 0)
      q = t.q_star[static_cast<std::size_t>(r - 1)];
    else
      return AtomCheck{true, visited};
  }
}

enum class Strategy { r1, rq, all_fast, all_brute };

inline const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::r1: return "r1";
    case Strategy::rq: return "rq";
    case Strategy::all_fast: return "all_fast";
    case Strategy::all_brute: return "all_brute";
  }
  return "?";
}

/// Result of one screening round. `screened` holds original column indices
/// (ascending); in sorted rank space the set is always a suffix.
struct ScreenOutcome {
  std::vector<int> screened;
  SortedCorrelations sorted;
  Strategy strategy;
  long thresholds_visited = 0;
};

namespace detail {

inline ScreenOutcome outcome_from_rank_suffix(SortedCorrelations sc, int first_rank,
                                              Strategy strategy, long visited) {
  ScreenOutcome out;
  out.strategy = strategy;
  out.thresholds_visited = visited;
  for (int rank = first_rank; rank < sc.size(); ++rank)
    out.screened.push_back(sc.perm[static_cast<std::size_t>(rank)]);
  std::sort(out.screened.begin(), out.screened.end());
  out.sorted = std::move(sc);
  return out;
}

}  // namespace detail

/// Joint test over the whole family, all atoms at once: build the tables,
/// walk ranks n-1 .. 0 and stop at the first failure (failures are nested:
/// once a rank fails, every smaller rank fails too).
/// O(n log n + s * T) with s atoms screened and T thresholds per chain.
inline ScreenOutcome screen_all_fast(SortedCorrelations sc, double lambda, const Weights& w,
                                     double radius, double safety_margin = 0.0,
                                     TieBreak tie = TieBreak::smallest) {
  detail::require(radius >= 0.0, "screen_all_fast: radius must be nonnegative");
  detail::require(sc.size() == w.size(), "screen_all_fast: size mismatch");
  ThresholdTables tables = build_threshold_tables(sc, lambda, w, radius, tie);
  long visited = 0;
  int rank = sc.size() - 1;
  for (; rank >= 0; --rank) {
    AtomCheck check = check_atom(rank, sc.v[rank], tables, lambda, w, radius, safety_margin);
    visited += check.thresholds_visited;
    if (!check.pass) break;
  }
  return detail::outcome_from_rank_suffix(std::move(sc), rank + 1, Strategy::all_fast, visited);
}

/// Brute-force oracle for the joint test, mirroring the same sequential
/// reduced semantics: at rank l the q-range is [0, l] and the deleted
/// correlations are v_0 .. v_{l-1}. O(n^3); guarded to small n.
inline ScreenOutcome screen_all_bruteforce(SortedCorrelations sc, double lambda, const Weights& w,
                                           double radius, double safety_margin = 0.0) {
  detail::require(radius >= 0.0, "screen_all_bruteforce: radius must be nonnegative");
  detail::require(sc.size() == w.size(), "screen_all_bruteforce: size mismatch");
  const int n = sc.size();
  detail::require(n <= 2000, "screen_all_bruteforce: n too large for the cubic oracle");
  std::vector<double> prefix(static_cast<std::size_t>(n) + 1, 0.0);
  for (int k = 0; k < n; ++k) prefix[k + 1] = prefix[k] + sc.v[k];

  long visited = 0;
  int rank = n - 1;
  for (; rank >= 0; --rank) {
    bool pass = true;
    for (int q = 0; q <= rank && pass; ++q) {
      bool some_r = false;
      for (int r = 0; r <= q; ++r) {
        ++visited;
        double deleted = prefix[q] - prefix[r];  // v_r + ... + v_{q-1}
        if (sc.v[rank] + deleted < kappa(lambda, w, radius, q, r) - safety_margin) {
          some_r = true;
          break;
        }
      }
      pass = some_r;
    }
    if (!pass) break;
  }
  return detail::outcome_from_rank_suffix(std::move(sc), rank + 1, Strategy::all_brute, visited);
}

/// Mask-producing strategies wrapped as ScreenOutcome for a uniform
/// reporting surface.
inline ScreenOutcome screen_with_mask(SortedCorrelations sc, const std::vector<bool>& mask,
                                      Strategy strategy) {
  ScreenOutcome out;
  out.strategy = strategy;
  for (int j = 0; j < static_cast<int>(mask.size()); ++j)
    if (mask[static_cast<std::size_t>(j)]) out.screened.push_back(j);
  out.sorted = std::move(sc);
  return out;
}

/// One-shot screening with any strategy against the sphere S(c, R).
inline ScreenOutcome screen(const Dictionary& a, const SafeSphere& sphere, double lambda,
                            const Weights& w, Strategy strategy, double safety_margin = 0.0) {
  VectorXd correlations = a.matrix().transpose() * sphere.center;
  SortedCorrelations sc = sort_correlations(correlations);
  switch (strategy) {
    case Strategy::r1: {
      std::vector<bool> mask = test_r1(sc, lambda, w, sphere.radius, safety_margin);
      return screen_with_mask(std::move(sc), mask, Strategy::r1);
    }
    case Strategy::rq: {
      std::vector<bool> mask = test_rq(correlations, lambda, w, sphere.radius, safety_margin);
      return screen_with_mask(std::move(sc), mask, Strategy::rq);
    }
    case Strategy::all_fast:
      return screen_all_fast(std::move(sc), lambda, w, sphere.radius, safety_margin);
    case Strategy::all_brute:
      return screen_all_bruteforce(std::move(sc), lambda, w, sphere.radius, safety_margin);
  }
  throw std::invalid_argument("screen: unknown strategy");
}

}  // namespace slopescreen
