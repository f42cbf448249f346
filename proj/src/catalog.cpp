#include "kmc/catalog.hpp"

#include <algorithm>

#include "kmc/errors.hpp"

namespace kmc {

int RateTree::find(double& r) const {
  int pos = 0;
  int mask = 1;
  while ((mask << 1) <= n_) mask <<= 1;
  for (; mask > 0; mask >>= 1) {
    const int next = pos + mask;
    if (next <= n_ && tree_[static_cast<std::size_t>(next)] <= r) {
      r -= tree_[static_cast<std::size_t>(next)];
      pos = next;
    }
  }
  if (pos >= n_) {
    for (pos = n_ - 1; pos > 0 && value_[static_cast<std::size_t>(pos)] <= 0.0; --pos) {
    }
    r = 0.0;
  }
  return pos;
}

EventCatalog::EventCatalog(const Model& model, const Configuration& sigma,
                           std::uint64_t rebuild_interval)
    : model_(model), rebuild_interval_(rebuild_interval) {
  rebuild(sigma);
}

void EventCatalog::rebuild(const Configuration& sigma) {
  const int n = sigma.lattice().size();
  tree_.reset(n);
  site_events_.assign(static_cast<std::size_t>(n), {});
  for (SiteIndex x = 0; x < n; ++x) refresh_site(sigma, x);
  since_rebuild_ = 0;
}

void EventCatalog::refresh_site(const Configuration& sigma, SiteIndex x) {
  auto& list = site_events_[static_cast<std::size_t>(x)];
  list.clear();
  model_.events_at(sigma, x, list);
  double sum = 0.0;
  for (const RatedEvent& e : list) {
    check(e.rate >= 0.0, "negative event rate");
    sum += e.rate;
  }
  tree_.set(x, sum);
}

const RatedEvent& EventCatalog::sample(double r) const {
  const int x = tree_.find(r);  // reduces r to the offset within site x
  const auto& list = site_events_[static_cast<std::size_t>(x)];
  check(!list.empty(), "sampled a site with no events");
  for (const RatedEvent& e : list) {
    if (r < e.rate) return e;
    r -= e.rate;
  }
  // Rounding pushed r past the site total; take the last event that can fire.
  for (auto it = list.rbegin(); it != list.rend(); ++it)
    if (it->rate > 0.0) return *it;
  throw InvariantError("sampled a site whose events all have zero rate");
}

void EventCatalog::apply(Configuration& sigma, const RatedEvent& e) {
  const UpdateDiff diff = apply_update(sigma, model_.shape(), e.ev);
  check(diff.n > 0, "event changed nothing");
  scratch_.clear();
  for (int i = 0; i < diff.n; ++i)
    model_.affected_sites(diff.site[static_cast<std::size_t>(i)], scratch_);
  std::sort(scratch_.begin(), scratch_.end());
  scratch_.erase(std::unique(scratch_.begin(), scratch_.end()), scratch_.end());
  for (SiteIndex x : scratch_) refresh_site(sigma, x);
  ++events_applied_;
  if (++since_rebuild_ >= rebuild_interval_) rebuild(sigma);
}

}  // namespace kmc
