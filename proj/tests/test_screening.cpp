#include "helpers.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <set>

using namespace slopescreen;
using Catch::Approx;

namespace {

Weights make_weights(std::initializer_list<double> v) {
  VectorXd w(static_cast<Eigen::Index>(v.size()));
  int i = 0;
  for (double x : v) w[i++] = x;
  return Weights(std::move(w));
}

SortedCorrelations make_sorted(std::initializer_list<double> v) {
  VectorXd x(static_cast<Eigen::Index>(v.size()));
  int i = 0;
  for (double e : v) x[i++] = e;
  return sort_correlations(x);
}

// random screening scene: sorted correlations, weights, lambda, radius
struct Scene {
  SortedCorrelations sc;
  Weights w;
  double lambda;
  double radius;
};

Scene random_scene(Rng& rng, bool with_ties = false) {
  int n = 2 + static_cast<int>(rng.uniform() * 40);
  VectorXd corr = th::random_vector(rng, n, 1.0);
  if (with_ties && n >= 4) {
    corr[1] = corr[0];
    corr[n - 1] = 0.0;
    corr[n - 2] = 0.0;
  }
  VectorXd wv(n);
  double cur = 0.5 + rng.uniform();
  for (int k = 0; k < n; ++k) {
    wv[k] = cur;
    if (!with_ties || rng.uniform() < 0.5)
      if (rng.uniform() < 0.6) cur *= 0.4 + 0.6 * rng.uniform();
  }
  double lambda = 0.3 + rng.uniform();
  double radius = rng.uniform() < 0.15 ? 0.0 : 0.4 * rng.uniform();
  return Scene{sort_correlations(corr), Weights(std::move(wv)), lambda, radius};
}

std::set<int> mask_to_set(const std::vector<bool>& mask) {
  std::set<int> s;
  for (int j = 0; j < static_cast<int>(mask.size()); ++j)
    if (mask[static_cast<std::size_t>(j)]) s.insert(j);
  return s;
}

std::set<int> to_set(const std::vector<int>& v) { return std::set<int>(v.begin(), v.end()); }

}  // namespace

TEST_CASE("sort_correlations examples") {
  SortedCorrelations zero = make_sorted({0.0, 0.0, 0.0});
  CHECK(zero.v.isZero());
  CHECK(zero.perm == std::vector<int>{0, 1, 2});

  MatrixXd eye = MatrixXd::Identity(2, 2);
  SortedCorrelations sc = sort_correlations(Dictionary::checked(eye), Eigen::Vector2d(1.0, 3.0));
  CHECK(sc.v[0] == Approx(3.0));
  CHECK(sc.v[1] == Approx(1.0));
  CHECK(sc.perm == std::vector<int>{1, 0});

  // permutation round trip recovers |A^T c|
  Rng rng(61);
  VectorXd corr = th::random_vector(rng, 17);
  SortedCorrelations sr = sort_correlations(corr);
  for (int rank = 0; rank < 17; ++rank)
    CHECK(sr.v[rank] == std::abs(corr[sr.perm[static_cast<std::size_t>(rank)]]));
}

TEST_CASE("kappa arithmetic") {
  Weights w = make_weights({1.0, 1.0});
  for (int q = 0; q < 2; ++q)
    for (int r = 0; r <= q; ++r) CHECK(kappa(1.0, w, 0.0, q, r) == Approx(q - r + 1));
  CHECK(kappa(1.0, w, 1.0, 0, 0) == Approx(0.0));  // radius = lambda * w_1
  Weights w2 = make_weights({2.0, 0.7});
  CHECK(kappa(1.5, w2, 0.3, 1, 1) == Approx(1.5 * 0.7 - 0.3));  // single-term sum
  CHECK_THROWS_AS(kappa(1.0, w, 0.0, 0, 1), std::invalid_argument);
}

TEST_CASE("test_r1 edge cases") {
  SortedCorrelations sc = make_sorted({0.4, 0.2});
  Weights w = make_weights({1.0, 0.5});

  // radius at least lambda * w_1 kills every atom at q = 1
  auto none = test_r1(sc, 1.0, w, 1.0);
  CHECK(mask_to_set(none).empty());

  // single atom: passes iff |a^T c| < lambda * w_1 - R
  SortedCorrelations one = make_sorted({0.3});
  Weights w1 = make_weights({1.0});
  CHECK(mask_to_set(test_r1(one, 1.0, w1, 0.5)) == std::set<int>{0});
  CHECK(mask_to_set(test_r1(one, 1.0, w1, 0.75)).empty());
}

TEST_CASE("test_r1 at the dual optimum identifies the zero set") {
  // At the exact dual optimum with radius zero the active atoms sit on the
  // test boundary, so the numerically well-posed form certifies the center
  // with the duality-gap radius; the mask then recovers the zero set.
  for (std::uint64_t seed = 71; seed < 77; ++seed) {
    ProblemInstance p = th::random_instance(seed, 25, 60, 0.5, 0.5);
    SolveResult ref = bench::reference_solve(p, ScreenStrategy::none);
    REQUIRE(ref.exit_reason == ExitReason::tolerance);
    ScaledDual sd = make_scaled_dual(p, ref.x, ScalingVariant::full);
    double radius = std::sqrt(2.0 * objectives(p, ref.x, sd.u).gap);
    auto mask = test_r1(sort_correlations(sd.atu), p.lambda(), p.weights(), radius);
    CHECK(mask_to_set(mask) == to_set(th::zero_set(ref.x)));
  }
}

TEST_CASE("test_rq examples") {
  Weights wz = make_weights({1.0, 0.0});
  VectorXd corr = Eigen::Vector2d(0.0, 0.0);
  // zero last weight: the test can never pass
  CHECK(mask_to_set(test_rq(corr, 1.0, wz, 0.0)).empty());

  Weights w = make_weights({1.0, 0.5});
  VectorXd c2 = Eigen::Vector2d(0.3, 0.9);
  // lambda * w_n = 0.5: thresholds 0.5 - R
  CHECK(mask_to_set(test_rq(c2, 1.0, w, 0.1)) == std::set<int>{0});   // 0.3 < 0.4
  CHECK(mask_to_set(test_rq(c2, 1.0, w, 0.25)).empty());              // 0.3 >= 0.25

  // unit weights: identical to the classical single-inner-product sphere test
  Rng rng(62);
  for (int t = 0; t < 30; ++t) {
    int n = 2 + static_cast<int>(rng.uniform() * 20);
    VectorXd c = th::random_vector(rng, n);
    double lambda = 0.2 + rng.uniform();
    double radius = 0.3 * rng.uniform();
    auto mask = test_rq(c, lambda, Weights(VectorXd::Ones(n)), radius);
    for (int j = 0; j < n; ++j)
      CHECK(mask[static_cast<std::size_t>(j)] == (std::abs(c[j]) < lambda - radius));
  }
}

TEST_CASE("threshold tables hand example") {
  SortedCorrelations sc = make_sorted({0.4, 0.2});
  Weights w = make_weights({1.0, 0.5});
  ThresholdTables t = build_threshold_tables(sc, 1.0, w, 0.1);
  CHECK(t.g[0] == Approx(0.7));
  CHECK(t.g[1] == Approx(0.2));
  CHECK(t.r_star == std::vector<int>{0, 0});
  // tie at k = 2 between g(1)-w_1 = -0.3 and g(2)-w_2 = -0.3: smallest index
  CHECK(t.q_star == std::vector<int>{0, 0});
}

TEST_CASE("threshold tables degenerate and identity checks") {
  // zero correlations, zero radius: g strictly decreasing, r_star all first
  Weights w = make_weights({1.0, 0.8, 0.5});
  SortedCorrelations sc = make_sorted({0.0, 0.0, 0.0});
  ThresholdTables t = build_threshold_tables(sc, 1.0, w, 0.0);
  CHECK(t.r_star == std::vector<int>{0, 0, 0});

  // table thresholds equal the direct sums
  Rng rng(63);
  for (int trial = 0; trial < 50; ++trial) {
    Scene s = random_scene(rng);
    ThresholdTables tables = build_threshold_tables(s.sc, s.lambda, s.w, s.radius);
    int n = s.sc.size();
    for (int q = 0; q < n; ++q) {
      for (int r = 0; r <= q; ++r) {
        double direct = s.lambda * s.w[q] - s.radius;
        for (int k = r; k < q; ++k) direct += s.lambda * s.w[k] - s.sc.v[k] - s.radius;
        double table = tables.g[r] - tables.g[q] + s.lambda * s.w[q] - s.radius;
        CHECK(table == Approx(direct).margin(1e-12));
      }
    }
  }
}

TEST_CASE("check_atom hand traces and joint-test consistency") {
  SortedCorrelations sc = make_sorted({0.4, 0.2});
  Weights w = make_weights({1.0, 0.5});
  double lambda = 1.0, radius = 0.1;
  ThresholdTables t = build_threshold_tables(sc, lambda, w, radius);

  AtomCheck last = check_atom(1, sc.v[1], t, lambda, w, radius);
  CHECK(last.pass);
  CHECK(last.thresholds_visited == 1);  // chain visits q = 1 only, tau = 0.9

  AtomCheck first = check_atom(0, sc.v[0], t, lambda, w, radius);
  CHECK(first.pass);

  // the chain's binding threshold matches the full min-max enumeration:
  // min over q of max over r of tau(q, r) = min(0.9, max(0.9, 0.4)) = 0.9
  double tau11 = kappa(lambda, w, radius, 0, 0);
  double tau21 = kappa(lambda, w, radius, 1, 0) - sc.v[0];
  double tau22 = kappa(lambda, w, radius, 1, 1);
  CHECK(tau11 == Approx(0.9));
  CHECK(tau21 == Approx(0.9));
  CHECK(tau22 == Approx(0.4));
  CHECK(std::min(tau11, std::max(tau21, tau22)) == Approx(0.9));
}

TEST_CASE("screen_all_fast worked example and degenerate radius") {
  SortedCorrelations sc = make_sorted({0.4, 0.2});
  Weights w = make_weights({1.0, 0.5});
  ScreenOutcome both = screen_all_fast(sc, 1.0, w, 0.1);
  CHECK(to_set(both.screened) == std::set<int>{0, 1});
  ScreenOutcome brute = screen_all_bruteforce(sc, 1.0, w, 0.1);
  CHECK(brute.screened == both.screened);

  // radius >= lambda * w_1: nothing can pass strictly
  CHECK(screen_all_fast(sc, 1.0, w, 1.0).screened.empty());
  CHECK(screen_all_bruteforce(sc, 1.0, w, 1.0).screened.empty());
}

TEST_CASE("fast screening equals the brute-force oracle") {
  Rng rng(64);
  for (int t = 0; t < 300; ++t) {
    Scene s = random_scene(rng, t % 3 == 0);
    ScreenOutcome fast = screen_all_fast(s.sc, s.lambda, s.w, s.radius);
    ScreenOutcome brute = screen_all_bruteforce(s.sc, s.lambda, s.w, s.radius);
    REQUIRE(fast.screened == brute.screened);
  }
}

TEST_CASE("screened ranks form a suffix in sorted order") {
  Rng rng(65);
  for (int t = 0; t < 50; ++t) {
    Scene s = random_scene(rng, true);
    ScreenOutcome out = screen_all_fast(s.sc, s.lambda, s.w, s.radius);
    std::set<int> screened = to_set(out.screened);
    // find the smallest screened rank; every larger rank must be screened
    int first_rank = s.sc.size();
    for (int rank = 0; rank < s.sc.size(); ++rank)
      if (screened.count(out.sorted.perm[static_cast<std::size_t>(rank)])) {
        first_rank = rank;
        break;
      }
    for (int rank = first_rank; rank < s.sc.size(); ++rank)
      CHECK(screened.count(out.sorted.perm[static_cast<std::size_t>(rank)]) == 1);
  }
}

TEST_CASE("joint test dominates both closed-form tests") {
  Rng rng(66);
  for (int t = 0; t < 200; ++t) {
    Scene s = random_scene(rng, t % 4 == 0);
    ScreenOutcome all = screen_all_fast(s.sc, s.lambda, s.w, s.radius);
    std::set<int> all_set = to_set(all.screened);

    auto r1 = mask_to_set(test_r1(s.sc, s.lambda, s.w, s.radius));
    // reconstruct raw correlations from the sorted view for test_rq
    VectorXd corr(s.sc.size());
    for (int rank = 0; rank < s.sc.size(); ++rank)
      corr[s.sc.perm[static_cast<std::size_t>(rank)]] = s.sc.v[rank];
    auto rq = mask_to_set(test_rq(corr, s.lambda, s.w, s.radius));

    for (int j : r1) CHECK(all_set.count(j) == 1);
    for (int j : rq) CHECK(all_set.count(j) == 1);
  }
}

TEST_CASE("unit weights collapse the joint test to the single-threshold test") {
  Rng rng(67);
  for (int t = 0; t < 100; ++t) {
    int n = 2 + static_cast<int>(rng.uniform() * 30);
    VectorXd corr = th::random_vector(rng, n, 1.0);
    if (t % 3 == 0 && n > 2) corr[1] = corr[0];
    Weights ones(VectorXd::Ones(n));
    double lambda = 0.2 + rng.uniform();
    double radius = 0.4 * rng.uniform();
    ScreenOutcome all = screen_all_fast(sort_correlations(corr), lambda, ones, radius);
    auto rq = mask_to_set(test_rq(corr, lambda, ones, radius));
    CHECK(to_set(all.screened) == rq);
  }
}

TEST_CASE("sphere bounds are nonincreasing along the sorted ranks") {
  // B(q, l; r) = v_l + sum_{k in [r, q-1]} of the deleted sorted values
  //            + (q - r + 1) R + lambda * (w_1 + ... + w_{r-1})
  // enumerated directly on small scenes, checked monotone in l for all (q, r)
  Rng rng(68);
  for (int t = 0; t < 40; ++t) {
    int n = 2 + static_cast<int>(rng.uniform() * 10);
    VectorXd corr = th::random_vector(rng, n, 1.0);
    SortedCorrelations sc = sort_correlations(corr);
    Weights w = th::random_weights(rng, n, true);
    double lambda = 0.3 + rng.uniform();
    double radius = 0.3 * rng.uniform();

    for (int q = 0; q < n; ++q) {
      for (int r = 0; r <= q; ++r) {
        double prev = std::numeric_limits<double>::infinity();
        for (int l = 0; l < n; ++l) {
          // sorted values of |A^T c| with rank l deleted
          std::vector<double> deleted;
          for (int k = 0; k < n; ++k)
            if (k != l) deleted.push_back(sc.v[k]);
          double sum = 0.0;
          for (int k = r; k < q; ++k) sum += deleted[static_cast<std::size_t>(k)];
          double bound = sc.v[l] + sum + (q - r + 1) * radius +
                         lambda * (r > 0 ? w.cumulative(r - 1) : 0.0);
          CHECK(bound <= prev + 1e-12);
          prev = bound;
        }
      }
    }
  }
}

TEST_CASE("argmax tie-breaking never changes the screened set") {
  Rng rng(69);
  for (int t = 0; t < 200; ++t) {
    Scene s = random_scene(rng, true);
    ScreenOutcome small_tie =
        screen_all_fast(s.sc, s.lambda, s.w, s.radius, 0.0, TieBreak::smallest);
    ScreenOutcome large_tie =
        screen_all_fast(s.sc, s.lambda, s.w, s.radius, 0.0, TieBreak::largest);
    REQUIRE(small_tie.screened == large_tie.screened);
  }
}

TEST_CASE("safety: screened atoms carry zero coefficients") {
  Rng seeds(70);
  for (int t = 0; t < 25; ++t) {
    double wlast = t % 3 == 0 ? 0.9 : (t % 3 == 1 ? 0.1 : 1e-3);
    ProblemInstance p = th::random_instance(seeds.next_u64(), 20, 45, wlast,
                                            0.3 + 0.5 * seeds.uniform());
    SolveResult ref = bench::reference_solve(p, ScreenStrategy::none);
    REQUIRE(ref.exit_reason == ExitReason::tolerance);
    std::set<int> zeros = to_set(th::zero_set(ref.x));

    for (long iters : {3L, 40L, 400L}) {
      SolveOptions part;
      part.gap_tol = 1e-15;
      part.max_iters = iters;
      SolveResult mid = solve(p, part);
      ScaledDual sd = make_scaled_dual(p, mid.x, ScalingVariant::full);
      SafeSphere sphere = make_gap_sphere(p, mid.x, sd.u);
      for (Strategy strategy :
           {Strategy::r1, Strategy::rq, Strategy::all_fast, Strategy::all_brute}) {
        ScreenOutcome out = screen(p.dict(), sphere, p.lambda(), p.weights(), strategy);
        for (int j : out.screened) CHECK(zeros.count(j) == 1);
      }
    }
  }
}

TEST_CASE("thresholds_visited is reported") {
  Rng rng(72);
  Scene s = random_scene(rng);
  ScreenOutcome out = screen_all_fast(s.sc, s.lambda, s.w, s.radius);
  CHECK(out.thresholds_visited >= 1);
  CHECK(out.thresholds_visited <= static_cast<long>(s.sc.size()) * s.sc.size() + s.sc.size());
}
