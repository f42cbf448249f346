#pragma once

#include <cstdint>
#include <vector>

#include "kmc/catalog.hpp"
#include "kmc/model.hpp"
#include "kmc/observable.hpp"
#include "kmc/rng.hpp"

namespace kmc {

/// Strictly increasing, nonnegative sample times.
struct Grid {
  std::vector<double> times;

  static Grid uniform(double t0, double t1, int count);
  static Grid list(std::vector<double> times);

  std::size_t size() const { return times.size(); }
  double back() const { return times.back(); }
};

/// Running observable value along a path. Count-based observables are
/// tracked through their integer numerator, so the recorded series is exact
/// no matter how many events fire; the hamiltonian accumulates in floating
/// point and is re-synced on catalog rebuilds by the callers that own one.
class ObservableTracker {
 public:
  ObservableTracker(const Observable& obs, const Configuration& sigma)
      : obs_(&obs), scale_(static_cast<double>(sigma.lattice().size())) {
    resync(sigma);
  }

  double value() const {
    return obs_->count_based() ? static_cast<double>(num_) / scale_ : val_;
  }

  /// Must be called with the pre-event configuration.
  void on_event(const Configuration& sigma, const NeighborhoodShape& shape,
                const RatedEvent& e) {
    if (obs_->count_based())
      num_ += obs_->delta_count(sigma, shape, e);
    else
      val_ += obs_->delta(sigma, shape, e);
  }

  void resync(const Configuration& sigma) {
    if (obs_->count_based())
      num_ = obs_->eval_count(sigma);
    else
      val_ = obs_->eval(sigma);
  }

 private:
  const Observable* obs_;
  double scale_;
  long long num_ = 0;
  double val_ = 0.0;
};

struct PathResult {
  std::vector<double> f;  // one entry per grid time
  Configuration final;    // configuration in force at the last grid time
  std::uint64_t events = 0;
};

/// One direct-method path. Grid samples are left limits: a grid time equal to
/// a jump time records the pre-jump value.
PathResult simulate_path(const Model& model, Configuration sigma, const Observable& obs,
                         const Grid& grid, RngStream& rng,
                         std::uint64_t rebuild_interval = EventCatalog::kDefaultRebuildInterval);

struct PairResult {
  std::vector<double> f_sigma, f_eta;
  Configuration sigma_final, eta_final;  // in force at the last grid time
  std::uint64_t events = 0;
};

/// Two independent paths (separate streams).
PairResult simulate_pair_uncoupled(const Model& a, const Model& b, Configuration sigma,
                                   Configuration eta, const Observable& obs, const Grid& grid,
                                   RngStream& rng_a, RngStream& rng_b);

/// Common random numbers: both processes draw from one stream, strictly
/// alternating one jump of sigma (waiting-time draw, then selection draw)
/// with one jump of eta. A process whose grid is exhausted stops drawing
/// (its final overshooting jump consumes only the waiting-time draw) and the
/// other continues on the shared stream.
PairResult simulate_pair_crn(const Model& a, const Model& b, Configuration sigma,
                             Configuration eta, const Observable& obs, const Grid& grid,
                             RngStream& shared);

}  // namespace kmc
