#pragma once

#include <cstdint>
#include <vector>

#include "kmc/model.hpp"

namespace kmc {

/// Fenwick tree over per-site rate totals: O(log N) point set and O(log N)
/// sampling by prefix sum.
class RateTree {
 public:
  explicit RateTree(int n = 0) { reset(n); }

  void reset(int n) {
    n_ = n;
    tree_.assign(static_cast<std::size_t>(n) + 1, 0.0);
    value_.assign(static_cast<std::size_t>(n), 0.0);
  }

  int size() const { return n_; }
  double value(int i) const { return value_[static_cast<std::size_t>(i)]; }
  double total() const { return prefix(n_); }

  void set(int i, double v) {
    const double d = v - value_[static_cast<std::size_t>(i)];
    value_[static_cast<std::size_t>(i)] = v;
    for (int j = i + 1; j <= n_; j += j & -j) tree_[static_cast<std::size_t>(j)] += d;
  }

  /// Smallest i with prefix(i+1) > r; r in [0, total()). On return r is
  /// reduced to the offset within entry i. Falls back to the last
  /// positive-rate entry when rounding pushes r past the end.
  int find(double& r) const;

 private:
  double prefix(int i) const {  // sum of values [0, i)
    double s = 0.0;
    for (int j = i; j > 0; j -= j & -j) s += tree_[static_cast<std::size_t>(j)];
    return s;
  }

  int n_ = 0;
  std::vector<double> tree_;
  std::vector<double> value_;
};

/// All currently enabled events, grouped by generating site, with rate totals
/// kept in a Fenwick tree for direct-method selection.
///
/// After an event fires, only sites whose neighborhood overlaps the changed
/// sites are re-enumerated. The per-site lists are rebuilt from scratch on
/// refresh (enumeration is pure), so incremental state equals a full rebuild
/// exactly; the Fenwick prefix sums accumulate rounding, which a periodic
/// full rebuild (every rebuild_interval events) keeps bounded.
class EventCatalog {
 public:
  static constexpr std::uint64_t kDefaultRebuildInterval = 1000000;

  EventCatalog(const Model& model, const Configuration& sigma,
               std::uint64_t rebuild_interval = kDefaultRebuildInterval);

  void rebuild(const Configuration& sigma);

  double total_rate() const { return tree_.total(); }

  /// Direct-method selection: r must lie in [0, total_rate()).
  const RatedEvent& sample(double r) const;

  /// Applies e to sigma, refreshes affected sites, counts the event.
  void apply(Configuration& sigma, const RatedEvent& e);

  const std::vector<RatedEvent>& events_at(SiteIndex x) const {
    return site_events_[static_cast<std::size_t>(x)];
  }
  std::uint64_t events_applied() const { return events_applied_; }
  const Model& model() const { return model_; }

 private:
  void refresh_site(const Configuration& sigma, SiteIndex x);

  const Model& model_;
  RateTree tree_;
  std::vector<std::vector<RatedEvent>> site_events_;
  std::vector<SiteIndex> scratch_;
  std::uint64_t events_applied_ = 0;
  std::uint64_t rebuild_interval_;
  std::uint64_t since_rebuild_ = 0;
};

}  // namespace kmc
