#pragma once

#include "slopescreen/slopescreen.hpp"

namespace th {

using namespace slopescreen;

inline VectorXd random_vector(Rng& rng, int n, double scale = 1.0) {
  VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = scale * rng.gaussian();
  return v;
}

// Strictly valid weight sequence with occasional flat stretches (ties).
inline Weights random_weights(Rng& rng, int n, bool allow_zero_tail = false) {
  VectorXd w(n);
  double cur = 0.5 + rng.uniform();
  for (int k = 0; k < n; ++k) {
    w[k] = cur;
    if (rng.uniform() < 0.6) cur *= 0.35 + 0.6 * rng.uniform();
  }
  if (allow_zero_tail && n > 1 && rng.uniform() < 0.3) {
    int tail = 1 + static_cast<int>(rng.uniform() * (n / 2));
    for (int k = n - tail; k < n; ++k) w[k] = 0.0;
  }
  return Weights(std::move(w));
}

inline Dictionary random_dictionary(Rng& rng, int m, int n, bool with_duplicates = false) {
  MatrixXd a(m, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < m; ++i) a(i, j) = rng.gaussian();
  if (with_duplicates && n >= 4) {
    a.col(1) = a.col(0);
    a.col(n - 1) = a.col(n - 2);
  }
  return Dictionary::normalized(std::move(a));
}

inline ProblemInstance random_instance(std::uint64_t seed, int m, int n, double w_last,
                                       double lambda_ratio,
                                       bench::DictKind kind = bench::DictKind::gaussian) {
  Dictionary a = bench::gen_dictionary(kind, m, n, derive_stream(seed, 1));
  VectorXd y = bench::gen_observation(m, derive_stream(seed, 2));
  Weights w = bench::oscar_weights(n, w_last);
  double lmax = lambda_max(a, y, w);
  return ProblemInstance(std::move(a), std::move(y), lambda_ratio * lmax, std::move(w));
}

inline std::vector<int> zero_set(const VectorXd& x, double tol = 1e-9) {
  std::vector<int> zeros;
  for (int j = 0; j < x.size(); ++j)
    if (std::abs(x[j]) <= tol) zeros.push_back(j);
  return zeros;
}

inline bool subset_of(const std::vector<int>& a, const std::vector<int>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

}  // namespace th
