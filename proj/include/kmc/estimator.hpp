#pragma once

#include <cstdint>
#include <vector>

#include "kmc/coupling.hpp"
#include "kmc/engine.hpp"
#include "kmc/model.hpp"
#include "kmc/observable.hpp"

namespace kmc {

// 99.5th normal percentile: two-sided 99% confidence intervals.
inline constexpr double kZ995 = 2.5758293035489008;

// Streaming mean/variance (Welford), mergeable (Chan). Merging b into a gives
// the same result as adding b's samples after a's, up to the usual pairwise
// rounding; the estimator pipeline fixes the merge order so repeated runs are
// bitwise identical.
struct Accumulator {
  std::uint64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x);
  void merge(const Accumulator& o);
  double variance() const;  // unbiased sample variance, 0 for n < 2
  double sem() const;       // standard error of the mean, 0 for n < 2
};

// Per-grid-point statistics of D(t) = f(perturbed path) - f(nominal path),
// plus the sample bookkeeping needed to merge partial runs safely.
struct EstimatorResult {
  std::vector<double> times;
  std::vector<Accumulator> diff;
  std::uint64_t master_seed = 0;
  std::uint64_t first_path = 0;  // path-index range [first_path, end_path)
  std::uint64_t end_path = 0;
  std::uint64_t events = 0;  // total events across both legs of all pairs

  double mean_diff(std::size_t i) const { return diff[i].mean; }
  double derivative(std::size_t i, double eps) const { return diff[i].mean / eps; }
  double variance(std::size_t i) const { return diff[i].variance(); }
  double ci_halfwidth(std::size_t i) const { return kZ995 * diff[i].sem(); }

  // Mean of the per-point sample variances over grid times in [t_lo, t_hi].
  double summary_variance(double t_lo, double t_hi) const;
};

// Merges two partial results over the same grid and master seed. The path
// ranges must not overlap: overlapping ranges would reuse random streams and
// silently correlate the "independent" samples.
EstimatorResult merge_results(const EstimatorResult& a, const EstimatorResult& b);

// Runs n_paths coupled pairs (path indices first_path .. first_path+n_paths-1)
// and accumulates D(t) per grid point. Work is split into fixed-size shards
// pulled by a small thread pool; shard results are merged in shard order, so
// the output is bitwise independent of the worker count.
EstimatorResult estimate_fd(const Model& nominal, const Model& perturbed,
                            const CouplingScheme& scheme, const Observable& obs,
                            const Partition& partition, const Configuration& initial,
                            const Grid& grid, std::uint64_t master_seed,
                            std::uint64_t first_path, std::uint64_t n_paths, int workers,
                            std::uint64_t shard_size = 256,
                            std::uint64_t rebuild_interval = EventCatalog::kDefaultRebuildInterval);

}  // namespace kmc
