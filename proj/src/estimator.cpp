#include "kmc/estimator.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "kmc/errors.hpp"

namespace kmc {

void Accumulator::add(double x) {
  ++n;
  const double d = x - mean;
  mean += d / static_cast<double>(n);
  m2 += d * (x - mean);
}

void Accumulator::merge(const Accumulator& o) {
  if (o.n == 0) return;
  if (n == 0) {
    *this = o;
    return;
  }
  const double nn = static_cast<double>(n) + static_cast<double>(o.n);
  const double d = o.mean - mean;
  mean += d * (static_cast<double>(o.n) / nn);
  m2 += o.m2 + d * d * (static_cast<double>(n) * static_cast<double>(o.n) / nn);
  n += o.n;
}

double Accumulator::variance() const {
  return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0;
}

double Accumulator::sem() const {
  return n > 1 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0;
}

double EstimatorResult::summary_variance(double t_lo, double t_hi) const {
  double sum = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < t_lo || times[i] > t_hi) continue;
    sum += diff[i].variance();
    ++count;
  }
  if (count == 0) throw ConfigError("summary window contains no grid points");
  return sum / count;
}

EstimatorResult merge_results(const EstimatorResult& a, const EstimatorResult& b) {
  if (a.times != b.times) throw ConfigError("cannot merge results over different grids");
  if (a.master_seed != b.master_seed)
    throw ConfigError("cannot merge results with different master seeds");
  const bool disjoint = a.end_path <= b.first_path || b.end_path <= a.first_path;
  if (!disjoint)
    throw ConfigError("cannot merge results with overlapping path ranges: "
                      "the pairs would share random streams");
  EstimatorResult out = a;
  for (std::size_t i = 0; i < out.diff.size(); ++i) out.diff[i].merge(b.diff[i]);
  out.first_path = std::min(a.first_path, b.first_path);
  out.end_path = std::max(a.end_path, b.end_path);
  out.events = a.events + b.events;
  return out;
}

EstimatorResult estimate_fd(const Model& nominal, const Model& perturbed,
                            const CouplingScheme& scheme, const Observable& obs,
                            const Partition& partition, const Configuration& initial,
                            const Grid& grid, std::uint64_t master_seed,
                            std::uint64_t first_path, std::uint64_t n_paths, int workers,
                            std::uint64_t shard_size, std::uint64_t rebuild_interval) {
  if (n_paths == 0) throw ConfigError("sample count must be positive");
  if (shard_size == 0) throw ConfigError("shard size must be positive");
  if (workers < 1) workers = 1;

  const std::size_t npts = grid.size();
  const std::uint64_t n_shards = (n_paths + shard_size - 1) / shard_size;

  struct Shard {
    std::vector<Accumulator> diff;
    std::uint64_t events = 0;
  };
  std::vector<Shard> shards(static_cast<std::size_t>(n_shards));

  std::atomic<std::uint64_t> next{0};
  std::mutex err_mu;
  std::exception_ptr first_error;

  auto work = [&]() {
    try {
      for (;;) {
        const std::uint64_t s = next.fetch_add(1);
        if (s >= n_shards) return;
        Shard& sh = shards[static_cast<std::size_t>(s)];
        sh.diff.assign(npts, {});
        const std::uint64_t lo = first_path + s * shard_size;
        const std::uint64_t hi = std::min(first_path + n_paths, lo + shard_size);
        for (std::uint64_t p = lo; p < hi; ++p) {
          const PairResult pr = simulate_pair(scheme, nominal, perturbed, initial, initial,
                                              obs, partition, grid, master_seed, p,
                                              rebuild_interval);
          for (std::size_t i = 0; i < npts; ++i)
            sh.diff[i].add(pr.f_eta[i] - pr.f_sigma[i]);
          sh.events += pr.events;
        }
      }
    } catch (...) {
      std::lock_guard<std::mutex> g(err_mu);
      if (!first_error) first_error = std::current_exception();
    }
  };

  if (workers == 1 || n_shards == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    const int nthreads = static_cast<int>(
        std::min<std::uint64_t>(static_cast<std::uint64_t>(workers), n_shards));
    pool.reserve(static_cast<std::size_t>(nthreads));
    for (int w = 0; w < nthreads; ++w) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  EstimatorResult out;
  out.times = grid.times;
  out.diff.assign(npts, {});
  out.master_seed = master_seed;
  out.first_path = first_path;
  out.end_path = first_path + n_paths;
  for (const Shard& sh : shards) {  // fixed merge order, independent of workers
    for (std::size_t i = 0; i < npts; ++i) out.diff[i].merge(sh.diff[i]);
    out.events += sh.events;
  }
  return out;
}

}  // namespace kmc
