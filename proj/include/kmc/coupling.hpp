#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kmc/engine.hpp"
#include "kmc/exactsum.hpp"
#include "kmc/model.hpp"
#include "kmc/observable.hpp"
#include "kmc/rng.hpp"

namespace kmc {

enum class SchemeKind {
  uncoupled,     // independent streams
  trivial,       // product chain: both processes in one clock, never jointly
  crn,           // common random numbers (shared stream, independent chains)
  micro_unopt,   // site/type-paired joint rate min(c_A, c_B)
  micro_opt,     // class-coupled within single-site cells (coarse with q = 1)
  coarse,        // class-coupled within cells of q sites
  macro,         // class-coupled over the whole lattice (q = N)
};

struct CouplingScheme {
  SchemeKind kind = SchemeKind::uncoupled;
  int q = 0;  // coarse only

  std::string label() const;
  static std::optional<CouplingScheme> parse(const std::string& text);
};

/// A coupled pair (sigma, eta) evolving as one Markov jump process.
class CoupledProcess {
 public:
  virtual ~CoupledProcess() = default;
  virtual double total_rate() const = 0;
  /// One coupled jump. `total` must be the value total_rate() returned for
  /// the current state. Draw order is fixed per implementation.
  virtual void step(RngStream& rng, double total) = 0;
  virtual double f_sigma() const = 0;
  virtual double f_eta() const = 0;
  virtual const Configuration& sigma() const = 0;
  virtual const Configuration& eta() const = 0;
  virtual std::uint64_t events() const = 0;
  /// Rebuild all derived tables from the configurations (consistency anchor).
  virtual void rebuild() = 0;
};

/// Site-paired coupling. Events of the two processes generated at the same
/// site with the same (type, slot) key form a pair with joint rate
///   none:  0                      (trivial product coupling)
///   unopt: min(c_A, c_B)
/// plus per-pair residuals c_A - joint and c_B - joint; unmatched events run
/// as single-process branches at full rate. Branch selection walks sites in
/// index order; a joint branch applies the sigma event first.
class MicroCoupler final : public CoupledProcess {
 public:
  enum class JointMode { none, unopt };

  MicroCoupler(const Model& a, const Model& b, Configuration sigma, Configuration eta,
               const Observable& obs, JointMode mode,
               std::uint64_t rebuild_interval = EventCatalog::kDefaultRebuildInterval);

  double total_rate() const override;
  void step(RngStream& rng, double total) override;
  double f_sigma() const override { return fa_.value(); }
  double f_eta() const override { return fb_.value(); }
  const Configuration& sigma() const override { return sigma_; }
  const Configuration& eta() const override { return eta_; }
  std::uint64_t events() const override { return events_; }
  void rebuild() override;

  struct Pair {
    RatedEvent a, b;
    double joint = 0.0;
    double delta_a = 0.0, delta_b = 0.0;  // observable increments
  };
  struct SiteTable {
    std::vector<Pair> pairs;
    std::vector<RatedEvent> a_only, b_only;
    double total = 0.0;
  };
  const SiteTable& site(SiteIndex x) const { return sites_[static_cast<std::size_t>(x)]; }

  /// F[c;f] = sum over pairs of joint * delta_a * delta_b, with joint rates
  /// optionally rescaled (diagnostics and feasibility probing).
  double functional_F(double joint_scale = 1.0) const;

 private:
  void refresh_site(SiteIndex x);
  void apply_side(bool side_a, const RatedEvent& e);

  const Model& a_;
  const Model& b_;
  Configuration sigma_, eta_;
  const Observable& obs_;
  JointMode mode_;
  std::vector<SiteTable> sites_;
  ObservableTracker fa_, fb_;
  std::vector<RatedEvent> buf_a_, buf_b_;
  std::vector<SiteIndex> scratch_;
  std::uint64_t events_ = 0;
  std::uint64_t rebuild_interval_;
  std::uint64_t since_rebuild_ = 0;
};

/// Class-coupled scheme: the lattice splits into contiguous cells of q sites
/// (row-major site order), events are classified by the partition of their
/// observable increment, and for each (class k, cell i) the pair of event
/// sets S_{k,i}(sigma), S_{k,i}(eta) is coupled through
///   joint:      min(lambda^A_{k,i}, lambda^B_{k,i})
///   A residual: lambda^A_{k,i} - joint
///   B residual: lambda^B_{k,i} - joint
/// with events drawn within their set proportionally to rate, independently
/// on each side of a joint branch. Draw order per step: branch, then the
/// sigma-side selection, then the eta-side selection (joint branches only).
class ClassCoupler final : public CoupledProcess {
 public:
  ClassCoupler(const Model& a, const Model& b, Configuration sigma, Configuration eta,
               const Observable& obs, const Partition& partition, int q,
               std::uint64_t rebuild_interval = EventCatalog::kDefaultRebuildInterval);

  double total_rate() const override;
  void step(RngStream& rng, double total) override;
  double f_sigma() const override { return fa_.value(); }
  double f_eta() const override { return fb_.value(); }
  const Configuration& sigma() const override { return sigma_; }
  const Configuration& eta() const override { return eta_; }
  std::uint64_t events() const override { return events_; }
  void rebuild() override;

  int cells() const { return cells_; }
  int classes() const { return classes_; }
  double lambda(bool side_a, int cell, int cls) const {
    return lam_[side_a ? 0 : 1][static_cast<std::size_t>(cell * classes_ + cls)];
  }

  /// F[c_q;f] = sum_{k,i} min(lambda^A,lambda^B) * mean_delta^A * mean_delta^B
  /// with rate-weighted mean increments per (k,i). For observables whose
  /// nonzero increments have one magnitude per sign class this reduces to the
  /// count-of-minima closed form.
  double functional_F(double joint_scale = 1.0) const;

 private:
  struct SideSite {
    std::vector<RatedEvent> events;
    std::vector<int> cls;
    std::vector<double> class_rate;    // per-class rate sum at this site
    std::vector<double> class_wdelta;  // per-class sum of rate * delta
  };

  void refresh_site(bool side_a, SiteIndex x);
  void recompute_cell(bool side_a, int cell);
  const RatedEvent* select_in_class(bool side_a, int cell, int cls, double r) const;
  void apply_side(bool side_a, const RatedEvent& e);

  const Model& a_;
  const Model& b_;
  Configuration sigma_, eta_;
  const Observable& obs_;
  const Partition& partition_;
  int q_;
  int cells_;
  int classes_;
  std::vector<SideSite> side_[2];
  std::vector<double> lam_[2];      // (cell, class) rate sums
  std::vector<double> wdelta_[2];   // (cell, class) rate-weighted delta sums
  ObservableTracker fa_, fb_;
  std::vector<SiteIndex> scratch_;
  std::vector<int> dirty_cells_;
  std::uint64_t events_ = 0;
  std::uint64_t rebuild_interval_;
  std::uint64_t since_rebuild_ = 0;
};

/// Coupled-process factory for the Markov-coupled schemes (trivial,
/// micro_unopt, micro_opt, coarse, macro). uncoupled and crn are not one
/// Markov process and are dispatched inside simulate_pair instead.
std::unique_ptr<CoupledProcess> make_coupled(const CouplingScheme& scheme, const Model& a,
                                             const Model& b, Configuration sigma,
                                             Configuration eta, const Observable& obs,
                                             const Partition& partition,
                                             std::uint64_t rebuild_interval =
                                                 EventCatalog::kDefaultRebuildInterval);

/// One finite-difference pair path under any scheme. Streams are derived from
/// (master_seed, path_index): substream 0 drives the pair (or the sigma leg
/// of an uncoupled pair, whose eta leg uses substream 1).
PairResult simulate_pair(const CouplingScheme& scheme, const Model& a, const Model& b,
                         const Configuration& sigma0, const Configuration& eta0,
                         const Observable& obs, const Partition& partition, const Grid& grid,
                         std::uint64_t master_seed, std::uint64_t path_index,
                         std::uint64_t rebuild_interval = EventCatalog::kDefaultRebuildInterval);

/// F[c;f] = sum_events c * (f(sigma^e)-f(sigma)) * (f(eta^e')-f(eta)) for the
/// scheme's joint rates at one state pair. Zero for trivial and uncoupled
/// (c == 0); undefined for crn.
double functional_F(const CouplingScheme& scheme, const Model& a, const Model& b,
                    const Configuration& sigma, const Configuration& eta,
                    const Observable& obs, const Partition& partition);

/// One granularity level of the coupling-functional chain at a state pair.
/// granularity -1 is the ungated site pairing (joint rates min(c_A, c_B) per
/// matching site/type/slot, signed increment products); granularity q >= 1 is
/// the class-coupled scheme with cells of q sites (q = N single cell). The
/// exact numerator is the functional times N^2, kept in exact arithmetic so
/// orderings across granularities can be asserted with zero tolerance; value
/// is its correctly rounded double divided by N^2.
struct ChainPoint {
  int granularity = 0;
  double value = 0.0;
  ExactSum numerator;
};

/// Evaluates the coupling functional across granularities with exact
/// summation. Requires a count observable whose per-event increments lie in
/// {-1, 0, +1} and fall in one partition class per increment value, so the
/// rate-weighted mean increments are class constants and the chain
///   F(site pairing) <= F(q=1) <= F(q) <= F(q=N)
/// transfers from exact arithmetic to the returned numbers.
std::vector<ChainPoint> functional_F_chain(const Model& a, const Model& b,
                                           const Configuration& sigma,
                                           const Configuration& eta, const Observable& obs,
                                           const Partition& partition,
                                           const std::vector<int>& granularities);

struct FeasibilityReport {
  bool ok = true;
  std::string violation;  // first violated bound, named
};

/// Exact feasibility of the scheme's joint rates at one state pair: every
/// branch rate nonnegative, every per-event row sum within [0, c_A], every
/// column sum within [0, c_B]. joint_scale rescales the joint rates so tests
/// can probe deliberately infeasible tables.
FeasibilityReport check_feasibility(const CouplingScheme& scheme, const Model& a,
                                    const Model& b, const Configuration& sigma,
                                    const Configuration& eta, const Observable& obs,
                                    const Partition& partition, double joint_scale = 1.0);

}  // namespace kmc
