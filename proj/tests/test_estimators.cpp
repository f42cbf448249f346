#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "kmc/errors.hpp"
#include "kmc/estimator.hpp"
#include "kmc/oracle.hpp"

using namespace kmc;

namespace {

bool same_result(const EstimatorResult& a, const EstimatorResult& b) {
  if (a.times != b.times || a.events != b.events) return false;
  if (a.first_path != b.first_path || a.end_path != b.end_path) return false;
  for (std::size_t i = 0; i < a.diff.size(); ++i) {
    if (a.diff[i].n != b.diff[i].n) return false;
    if (a.diff[i].mean != b.diff[i].mean) return false;
    if (a.diff[i].m2 != b.diff[i].m2) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("accumulator matches closed-form moments") {
  Accumulator acc;
  CHECK(acc.variance() == 0.0);
  CHECK(acc.sem() == 0.0);
  acc.add(1.0);
  CHECK(acc.mean == 1.0);
  CHECK(acc.variance() == 0.0);  // unbiased variance undefined below two samples
  for (double x : {2.0, 3.0, 4.0}) acc.add(x);
  CHECK(acc.n == 4);
  CHECK(acc.mean == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(acc.variance() == doctest::Approx(5.0 / 3.0).epsilon(1e-15));
  CHECK(acc.sem() == doctest::Approx(std::sqrt(5.0 / 12.0)).epsilon(1e-15));
}

TEST_CASE("merging accumulators equals one pass over the concatenation") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 5.0);
  std::vector<double> xs(997);
  for (double& x : xs) x = u(rng);

  Accumulator whole;
  for (double x : xs) whole.add(x);

  // Any split point gives the same moments up to roundoff.
  for (std::size_t cut : {std::size_t{0}, std::size_t{1}, std::size_t{500}, xs.size()}) {
    Accumulator lo, hi;
    for (std::size_t i = 0; i < cut; ++i) lo.add(xs[i]);
    for (std::size_t i = cut; i < xs.size(); ++i) hi.add(xs[i]);
    lo.merge(hi);
    CHECK(lo.n == whole.n);
    CHECK(lo.mean == doctest::Approx(whole.mean).epsilon(1e-12));
    CHECK(lo.m2 == doctest::Approx(whole.m2).epsilon(1e-9));
  }

  // Merging an empty accumulator is the identity, in both directions.
  Accumulator empty, copy = whole;
  copy.merge(empty);
  CHECK(copy.n == whole.n);
  CHECK(copy.mean == whole.mean);
  CHECK(copy.m2 == whole.m2);
  empty.merge(whole);
  CHECK(empty.mean == whole.mean);
  CHECK(empty.m2 == whole.m2);
}

TEST_CASE("confidence scaling uses the 99.5th normal percentile") {
  // Two-sided 99% coverage: Phi(k) = 0.995.
  CHECK(0.5 * std::erfc(-kZ995 / std::sqrt(2.0)) == doctest::Approx(0.995).epsilon(1e-12));

  EstimatorResult r;
  r.times = {1.0};
  r.diff.resize(1);
  for (double x : {0.0, 1.0, 2.0, 3.0}) r.diff[0].add(x);
  CHECK(r.mean_diff(0) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(r.derivative(0, 0.25) == doctest::Approx(6.0).epsilon(1e-15));
  CHECK(r.variance(0) == doctest::Approx(5.0 / 3.0).epsilon(1e-15));
  CHECK(r.ci_halfwidth(0) ==
        doctest::Approx(kZ995 * std::sqrt(5.0 / 12.0)).epsilon(1e-15));
}

TEST_CASE("summary variance averages the window and rejects an empty one") {
  EstimatorResult r;
  r.times = {0.0, 1.0, 2.0, 3.0};
  r.diff.resize(4);
  for (std::size_t i = 0; i < 4; ++i) {
    r.diff[i].add(0.0);
    r.diff[i].add(static_cast<double>(i));  // variance i^2 / 2
  }
  CHECK(r.summary_variance(1.0, 2.0) == doctest::Approx((0.5 + 2.0) / 2).epsilon(1e-15));
  CHECK(r.summary_variance(0.0, 3.0) == doctest::Approx((0.0 + 0.5 + 2.0 + 4.5) / 4)
                                            .epsilon(1e-15));
  CHECK(r.summary_variance(2.0, 2.0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK_THROWS_AS(r.summary_variance(10.0, 11.0), ConfigError);
}

TEST_CASE("estimates are bitwise independent of the worker count") {
  const Model a(ModelKind::ising_ad, Lattice::line(8), Params{});
  const Model b = a.with_params(perturb(a.params(), {Param::beta, 0.1}));
  const Observable f = Observable::coverage(0);
  const Partition part = Partition::sign();
  const Grid grid = Grid::uniform(0.5, 2.0, 4);
  const Configuration init(a.lattice(), 0);
  const CouplingScheme scheme{SchemeKind::micro_opt, 0};

  const EstimatorResult w1 =
      estimate_fd(a, b, scheme, f, part, init, grid, 77, 0, 300, 1, 32);
  const EstimatorResult w2 =
      estimate_fd(a, b, scheme, f, part, init, grid, 77, 0, 300, 2, 32);
  const EstimatorResult w5 =
      estimate_fd(a, b, scheme, f, part, init, grid, 77, 0, 300, 5, 32);
  CHECK(same_result(w1, w2));
  CHECK(same_result(w1, w5));
  CHECK(w1.diff[0].n == 300);
  CHECK(w1.events > 0);
}

TEST_CASE("partial runs merge into exactly the full run") {
  const Model a(ModelKind::ising_ad, Lattice::line(6), Params{});
  const Model b = a.with_params(perturb(a.params(), {Param::h, 0.2}));
  const Observable f = Observable::coverage(0);
  const Partition part = Partition::sign();
  const Grid grid = Grid::list({0.7, 1.9});
  const Configuration init(a.lattice(), 0);
  const CouplingScheme scheme{SchemeKind::coarse, 2};

  const EstimatorResult full =
      estimate_fd(a, b, scheme, f, part, init, grid, 5, 0, 256, 1, 64);
  // A single-shard tail keeps the merge a left fold, so splitting there
  // reproduces the full run bit for bit.
  const EstimatorResult lo = estimate_fd(a, b, scheme, f, part, init, grid, 5, 0, 192, 1, 64);
  const EstimatorResult hi =
      estimate_fd(a, b, scheme, f, part, init, grid, 5, 192, 64, 1, 64);
  const EstimatorResult merged = merge_results(lo, hi);
  CHECK(same_result(full, merged));
  CHECK(merged.first_path == 0);
  CHECK(merged.end_path == 256);
  CHECK(merged.events == lo.events + hi.events);

  // Any other shard-aligned split agrees up to merge-order roundoff.
  const EstimatorResult la = estimate_fd(a, b, scheme, f, part, init, grid, 5, 0, 128, 1, 64);
  const EstimatorResult lb =
      estimate_fd(a, b, scheme, f, part, init, grid, 5, 128, 128, 1, 64);
  const EstimatorResult balanced = merge_results(la, lb);
  for (std::size_t i = 0; i < full.diff.size(); ++i) {
    CHECK(balanced.diff[i].n == full.diff[i].n);
    CHECK(balanced.diff[i].mean == doctest::Approx(full.diff[i].mean).epsilon(1e-12));
    CHECK(balanced.diff[i].m2 == doctest::Approx(full.diff[i].m2).epsilon(1e-9));
  }

  // Merging in the other order keeps the range bookkeeping right.
  const EstimatorResult swapped = merge_results(hi, lo);
  CHECK(swapped.first_path == 0);
  CHECK(swapped.end_path == 256);

  // Overlapping ranges, foreign grids, and foreign seeds are rejected.
  const EstimatorResult overlap =
      estimate_fd(a, b, scheme, f, part, init, grid, 5, 100, 64, 1, 64);
  CHECK_THROWS_AS(merge_results(lo, overlap), ConfigError);
  EstimatorResult other_grid = hi;
  other_grid.times = {0.7};
  other_grid.diff.resize(1);
  CHECK_THROWS_AS(merge_results(lo, other_grid), ConfigError);
  EstimatorResult other_seed = hi;
  other_seed.master_seed = 6;
  CHECK_THROWS_AS(merge_results(lo, other_seed), ConfigError);

  CHECK_THROWS_AS(estimate_fd(a, b, scheme, f, part, init, grid, 5, 0, 0, 1), ConfigError);
  CHECK_THROWS_AS(estimate_fd(a, b, scheme, f, part, init, grid, 5, 0, 10, 1, 0), ConfigError);
}

TEST_CASE("confidence intervals cover the exact finite difference") {
  // Two-state chain: the exact difference curve is computable, so nominal 99%
  // intervals from independent replications should cover it almost always.
  Params p;
  p.beta = 0.0;
  p.c_a = 1.0;
  p.c_d = 1.0;
  const Model a(ModelKind::ising_ad, Lattice::line(1), p);
  const Model b = a.with_params(perturb(a.params(), {Param::c_a, 0.3}));
  const Observable f = Observable::coverage(0);
  const Partition part = Partition::sign();
  const Grid grid = Grid::list({0.5, 1.5});
  const Configuration init(a.lattice(), 0);

  const StateSpace space(a.lattice(), a.species());
  const std::vector<double> truth = exact_fd(b, a, space, f, init, grid.times);
  REQUIRE(truth.size() == 2);
  CHECK(truth[0] > 0.0);  // faster adsorption raises coverage

  int covered = 0, total = 0;
  for (std::uint64_t rep = 0; rep < 200; ++rep) {
    const EstimatorResult r =
        estimate_fd(a, b, CouplingScheme{SchemeKind::uncoupled, 0}, f, part, init, grid, 909,
                    rep * 200, 200, 1);
    for (std::size_t i = 0; i < 2; ++i) {
      ++total;
      if (std::abs(r.mean_diff(i) - truth[i]) <= r.ci_halfwidth(i)) ++covered;
    }
  }
  // Binomial(400, 0.99): fewer than 388 hits has probability ~1e-6.
  CHECK(total == 400);
  CHECK(covered >= 388);
}

TEST_CASE("coupling shrinks the estimator variance on a solvable chain") {
  Params p;
  p.beta = 0.0;
  p.c_a = 1.0;
  p.c_d = 1.0;
  const Model a(ModelKind::ising_ad, Lattice::line(4), p);
  const Model b = a.with_params(perturb(a.params(), {Param::c_a, 0.05}));
  const Observable f = Observable::coverage(0);
  const Partition part = Partition::sign();
  const Grid grid = Grid::list({2.0});
  const Configuration init(a.lattice(), 0);

  const EstimatorResult plain =
      estimate_fd(a, b, CouplingScheme{SchemeKind::uncoupled, 0}, f, part, init, grid, 31, 0,
                  3000, 1);
  const EstimatorResult glued =
      estimate_fd(a, b, CouplingScheme{SchemeKind::micro_opt, 0}, f, part, init, grid, 31, 0,
                  3000, 1);
  CHECK(glued.variance(0) > 0.0);
  CHECK(glued.variance(0) < 0.25 * plain.variance(0));

  // Both estimates still agree with the exact curve within a generous band.
  const StateSpace space(a.lattice(), a.species());
  const std::vector<double> truth = exact_fd(b, a, space, f, init, grid.times);
  CHECK(std::abs(plain.mean_diff(0) - truth[0]) <= 5.0 * plain.diff[0].sem());
  CHECK(std::abs(glued.mean_diff(0) - truth[0]) <= 5.0 * glued.diff[0].sem());
}
