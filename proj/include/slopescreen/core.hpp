#pragma once

// Problem data model for sorted-L1 penalized least squares:
//   min_x  0.5 * ||y - A x||^2 + lambda * omega(x)
// where omega(x) = sum_k w_k * |x|_[k] sorts |x| in decreasing order and
// weights it with a nonincreasing sequence w. This header holds the domain
// types, the norm and its dual, the duality gap, the proximal operator of
// the sorted-L1 norm and the subdifferential membership oracle.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace slopescreen {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Thrown when a numerical guard rejects a configuration (as opposed to a
/// malformed argument), e.g. per-rank dual scaling with a zero weight.
class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// Order of indices sorting |x| in decreasing order, ties broken by
// ascending original index. order[rank] = original index.
inline std::vector<int> abs_sort_order(const VectorXd& x) {
  std::vector<int> order(static_cast<std::size_t>(x.size()));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    double fa = std::abs(x[a]);
    double fb = std::abs(x[b]);
    if (fa != fb) return fa > fb;
    return a < b;
  });
  return order;
}

// |x| sorted in decreasing order.
inline VectorXd abs_sorted_desc(const VectorXd& x) {
  VectorXd v = x.cwiseAbs();
  std::sort(v.data(), v.data() + v.size(), std::greater<double>());
  return v;
}

}  // namespace detail

/// Nonincreasing nonnegative weight sequence with w[0] > 0.
class Weights {
 public:
  explicit Weights(VectorXd values) : values_(std::move(values)) {
    detail::require(values_.size() > 0, "Weights: empty sequence");
    detail::require(values_[0] > 0.0, "Weights: first weight must be positive");
    for (Eigen::Index k = 0; k < values_.size(); ++k) {
      detail::require(values_[k] >= 0.0, "Weights: negative weight");
      if (k > 0)
        detail::require(values_[k - 1] >= values_[k], "Weights: sequence must be nonincreasing");
    }
    cumsum_.resize(values_.size());
    double acc = 0.0;
    for (Eigen::Index k = 0; k < values_.size(); ++k) {
      acc += values_[k];
      cumsum_[k] = acc;
    }
  }

  int size() const { return static_cast<int>(values_.size()); }
  double operator[](int k) const { return values_[k]; }
  const VectorXd& values() const { return values_; }
  /// cumulative(k) = w_0 + ... + w_k
  double cumulative(int k) const { return cumsum_[k]; }

  /// First n_keep weights (the reduction rule for certified zeros: dropped
  /// coordinates occupy the lowest ranks of the sorted solution).
  Weights head(int n_keep) const { return Weights(values_.head(n_keep)); }

 private:
  VectorXd values_;
  VectorXd cumsum_;
};

/// Dense dictionary with unit-norm columns.
class Dictionary {
 public:
  /// Rescales every column to unit Euclidean norm.
  static Dictionary normalized(MatrixXd a) {
    detail::require(a.rows() > 0 && a.cols() > 0, "Dictionary: empty matrix");
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      double norm = a.col(j).norm();
      detail::require(norm > 0.0, "Dictionary: zero column cannot be normalized");
      a.col(j) /= norm;
    }
    return Dictionary(std::move(a));
  }

  /// Asserts that columns already have unit norm within tol.
  static Dictionary checked(MatrixXd a, double tol = 1e-12) {
    detail::require(a.rows() > 0 && a.cols() > 0, "Dictionary: empty matrix");
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      detail::require(std::abs(a.col(j).norm() - 1.0) <= tol,
                      "Dictionary: column norm differs from 1 beyond tolerance");
    return Dictionary(std::move(a));
  }

  int rows() const { return static_cast<int>(a_.rows()); }
  int cols() const { return static_cast<int>(a_.cols()); }
  const MatrixXd& matrix() const { return a_; }

 private:
  explicit Dictionary(MatrixXd a) : a_(std::move(a)) {}
  MatrixXd a_;
};

/// omega(x) = sum_k w_k |x|_[k]. A norm since w[0] > 0.
inline double slope_norm(const VectorXd& x, const Weights& w) {
  detail::require(x.size() == w.size(), "slope_norm: length mismatch");
  VectorXd v = detail::abs_sorted_desc(x);
  return v.dot(w.values());
}

/// Dual norm of the sorted-L1 norm:
///   max_q (sum of q largest |g|) / (sum of first q weights).
/// One sort plus one prefix-sum pass.
inline double dual_norm(const VectorXd& g, const Weights& w) {
  detail::require(g.size() == w.size(), "dual_norm: length mismatch");
  VectorXd v = detail::abs_sorted_desc(g);
  double best = 0.0;
  double acc = 0.0;
  for (int q = 0; q < w.size(); ++q) {
    acc += v[q];
    best = std::max(best, acc / w.cumulative(q));
  }
  return best;
}

/// Smallest regularization level for which 0 minimizes the problem.
inline double lambda_max(const Dictionary& a, const VectorXd& y, const Weights& w) {
  detail::require(y.size() == a.rows(), "lambda_max: observation length mismatch");
  return dual_norm(a.matrix().transpose() * y, w);
}

/// Full problem instance. lambda >= lambda_max is legal input (the solution
/// is then 0); only positivity is enforced here.
class ProblemInstance {
 public:
  ProblemInstance(Dictionary a, VectorXd y, double lambda, Weights weights)
      : a_(std::move(a)), y_(std::move(y)), lambda_(lambda), weights_(std::move(weights)) {
    detail::require(lambda_ > 0.0, "ProblemInstance: lambda must be positive");
    detail::require(y_.size() == a_.rows(), "ProblemInstance: observation length mismatch");
    detail::require(weights_.size() == a_.cols(), "ProblemInstance: weights length mismatch");
  }

  const Dictionary& dict() const { return a_; }
  const VectorXd& y() const { return y_; }
  double lambda() const { return lambda_; }
  const Weights& weights() const { return weights_; }
  int m() const { return a_.rows(); }
  int n() const { return a_.cols(); }

 private:
  Dictionary a_;
  VectorXd y_;
  double lambda_;
  Weights weights_;
};

/// True iff all n cumulative dual constraints hold within an absolute tol:
///   sum of q largest |A^T u|  <=  lambda * (sum of first q weights) + tol.
inline bool is_dual_feasible(const Dictionary& a, const VectorXd& u, double lambda,
                             const Weights& w, double tol = 1e-12) {
  detail::require(u.size() == a.rows(), "is_dual_feasible: length mismatch");
  VectorXd v = detail::abs_sorted_desc(a.matrix().transpose() * u);
  double acc = 0.0;
  for (int q = 0; q < w.size(); ++q) {
    acc += v[q];
    if (acc > lambda * w.cumulative(q) + tol) return false;
  }
  return true;
}

/// Point of the dual feasible set. Feasibility is the constructor's
/// contract: `verified` asserts it, `trusted` is for values feasible by
/// construction (dual scaling, the origin).
class DualPoint {
 public:
  static DualPoint verified(const Dictionary& a, VectorXd u, double lambda, const Weights& w,
                            double tol = 1e-12) {
    detail::require(is_dual_feasible(a, u, lambda, w, tol),
                    "DualPoint: vector violates the dual constraints");
    return DualPoint(std::move(u));
  }

  static DualPoint trusted(VectorXd u) { return DualPoint(std::move(u)); }

  const VectorXd& vector() const { return u_; }

 private:
  explicit DualPoint(VectorXd u) : u_(std::move(u)) {}
  VectorXd u_;
};

struct Objectives {
  double primal;
  double dual;
  double gap;  // primal - dual clamped at 0
};

inline double primal_objective(const ProblemInstance& p, const VectorXd& x) {
  detail::require(x.size() == p.n(), "primal_objective: length mismatch");
  double residual = (p.y() - p.dict().matrix() * x).squaredNorm();
  return 0.5 * residual + p.lambda() * slope_norm(x, p.weights());
}

inline double dual_objective(const ProblemInstance& p, const VectorXd& u) {
  detail::require(u.size() == p.m(), "dual_objective: length mismatch");
  return 0.5 * p.y().squaredNorm() - 0.5 * (p.y() - u).squaredNorm();
}

/// Primal value, dual value and the clamped duality gap. The clamp removes
/// roundoff-negative gaps before they reach any square root.
inline Objectives objectives(const ProblemInstance& p, const VectorXd& x, const DualPoint& u) {
  double primal = primal_objective(p, x);
  double dual = dual_objective(p, u.vector());
  return Objectives{primal, dual, std::max(0.0, primal - dual)};
}

/// prox of t * lambda * omega at z:
///   argmin_x 0.5 ||x - z||^2 + t * lambda * omega(x).
/// Sort |z| decreasing, subtract the scaled weights, project onto the
/// nonincreasing cone by pooling adjacent violators, clip at zero, undo the
/// sort and the signs. O(n log n).
inline VectorXd prox_sorted_l1(const VectorXd& z, double t, double lambda, const Weights& w) {
  detail::require(z.size() == w.size(), "prox_sorted_l1: length mismatch");
  detail::require(t > 0.0 && lambda > 0.0, "prox_sorted_l1: step and lambda must be positive");
  const int n = static_cast<int>(z.size());
  const double scale = t * lambda;

  std::vector<int> order = detail::abs_sort_order(z);

  // Blocks of pooled values: block j covers sorted ranks [start[j], end[j]]
  // and carries the running sum of its shifted entries.
  std::vector<int> start(n), end(n);
  std::vector<double> sum(n), avg(n);
  int top = -1;
  for (int i = 0; i < n; ++i) {
    double d = std::abs(z[order[i]]) - scale * w[i];
    ++top;
    start[top] = i;
    end[top] = i;
    sum[top] = d;
    avg[top] = d;
    while (top > 0 && avg[top - 1] <= avg[top]) {
      sum[top - 1] += sum[top];
      end[top - 1] = end[top];
      avg[top - 1] = sum[top - 1] / (end[top - 1] - start[top - 1] + 1);
      --top;
    }
  }

  VectorXd result = VectorXd::Zero(n);
  for (int j = 0; j <= top; ++j) {
    double value = std::max(0.0, avg[j]);
    if (value == 0.0) break;  // blocks are strictly decreasing from here on
    for (int i = start[j]; i <= end[j]; ++i) {
      int idx = order[i];
      result[idx] = (z[idx] < 0.0) ? -value : value;
    }
  }
  return result;
}

/// Membership oracle for the subdifferential of omega at x:
///   g in d(omega)(x)  iff  <g, x> = omega(x)  and  the cumulative sorted
/// sums of |g| stay below the cumulative weights. Checked within tol.
inline bool subdiff_membership(const VectorXd& x, const VectorXd& g, const Weights& w,
                               double tol) {
  detail::require(x.size() == g.size() && x.size() == w.size(),
                  "subdiff_membership: length mismatch");
  if (std::abs(g.dot(x) - slope_norm(x, w)) > tol) return false;
  VectorXd v = detail::abs_sorted_desc(g);
  double acc = 0.0;
  for (int q = 0; q < w.size(); ++q) {
    acc += v[q];
    if (acc > w.cumulative(q) + tol) return false;
  }
  return true;
}

}  // namespace slopescreen
