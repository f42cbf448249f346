#include "kmc/coupling.hpp"

#include <algorithm>
#include <cmath>

#include "kmc/errors.hpp"

namespace kmc {

namespace {

const char* event_type_name(EventType t) {
  switch (t) {
    case EventType::flip: return "flip";
    case EventType::exchange: return "exchange";
    case EventType::co_adsorb: return "co_adsorb";
    case EventType::o2_adsorb: return "o2_adsorb";
    case EventType::co_diffuse: return "co_diffuse";
    case EventType::co_desorb: return "co_desorb";
    case EventType::react: return "react";
  }
  return "?";
}

int pair_key(const RatedEvent& e) {
  return (static_cast<int>(e.type) << 8) | static_cast<int>(e.slot);
}

void require_compatible(const Model& a, const Model& b, const Configuration& sigma,
                        const Configuration& eta) {
  if (!(a.lattice() == b.lattice()) || a.kind() != b.kind())
    throw ConfigError("coupled processes need the same model kind and lattice");
  if (!(sigma.lattice() == a.lattice()) || !(eta.lattice() == a.lattice()))
    throw ConfigError("initial configurations must live on the model lattice");
}

}  // namespace

std::string CouplingScheme::label() const {
  switch (kind) {
    case SchemeKind::uncoupled: return "uncoupled";
    case SchemeKind::trivial: return "trivial";
    case SchemeKind::crn: return "crn";
    case SchemeKind::micro_unopt: return "micro_unopt";
    case SchemeKind::micro_opt: return "micro_opt";
    case SchemeKind::coarse: return "coarse_q" + std::to_string(q);
    case SchemeKind::macro: return "macro";
  }
  return "?";
}

std::optional<CouplingScheme> CouplingScheme::parse(const std::string& text) {
  if (text == "uncoupled") return CouplingScheme{SchemeKind::uncoupled, 0};
  if (text == "trivial") return CouplingScheme{SchemeKind::trivial, 0};
  if (text == "crn") return CouplingScheme{SchemeKind::crn, 0};
  if (text == "micro_unopt") return CouplingScheme{SchemeKind::micro_unopt, 0};
  if (text == "micro_opt") return CouplingScheme{SchemeKind::micro_opt, 0};
  if (text == "coarse") return CouplingScheme{SchemeKind::coarse, 0};
  if (text == "macro") return CouplingScheme{SchemeKind::macro, 0};
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// MicroCoupler

MicroCoupler::MicroCoupler(const Model& a, const Model& b, Configuration sigma,
                           Configuration eta, const Observable& obs,
                           JointMode mode,
                           std::uint64_t rebuild_interval)
    : a_(a),
      b_(b),
      sigma_(std::move(sigma)),
      eta_(std::move(eta)),
      obs_(obs),
      mode_(mode),
      fa_(obs, sigma_),
      fb_(obs, eta_),
      rebuild_interval_(rebuild_interval) {
  require_compatible(a_, b_, sigma_, eta_);
  sites_.assign(static_cast<std::size_t>(sigma_.size()), {});
  for (SiteIndex x = 0; x < sigma_.size(); ++x) refresh_site(x);
}

void MicroCoupler::refresh_site(SiteIndex x) {
  SiteTable& st = sites_[static_cast<std::size_t>(x)];
  st.pairs.clear();
  st.a_only.clear();
  st.b_only.clear();
  buf_a_.clear();
  buf_b_.clear();
  a_.events_at(sigma_, x, buf_a_);
  b_.events_at(eta_, x, buf_b_);
  auto by_key = [](const RatedEvent& l, const RatedEvent& r) {
    return pair_key(l) < pair_key(r);
  };
  std::sort(buf_a_.begin(), buf_a_.end(), by_key);
  std::sort(buf_b_.begin(), buf_b_.end(), by_key);

  std::size_t i = 0, j = 0;
  while (i < buf_a_.size() && j < buf_b_.size()) {
    const int ka = pair_key(buf_a_[i]), kb = pair_key(buf_b_[j]);
    if (ka == kb) {
      Pair p;
      p.a = buf_a_[i++];
      p.b = buf_b_[j++];
      p.delta_a = obs_.delta(sigma_, a_.shape(), p.a);
      p.delta_b = obs_.delta(eta_, b_.shape(), p.b);
      switch (mode_) {
        case JointMode::none: p.joint = 0.0; break;
        case JointMode::unopt: p.joint = std::min(p.a.rate, p.b.rate); break;
      }
      st.pairs.push_back(p);
    } else if (ka < kb) {
      st.a_only.push_back(buf_a_[i++]);
    } else {
      st.b_only.push_back(buf_b_[j++]);
    }
  }
  for (; i < buf_a_.size(); ++i) st.a_only.push_back(buf_a_[i]);
  for (; j < buf_b_.size(); ++j) st.b_only.push_back(buf_b_[j]);

  double total = 0.0;
  for (const Pair& p : st.pairs) {
    check(p.joint >= 0.0 && p.joint <= p.a.rate && p.joint <= p.b.rate,
          "joint rate outside [0, min(c_A, c_B)]");
    total += p.a.rate + p.b.rate - p.joint;
  }
  for (const RatedEvent& e : st.a_only) total += e.rate;
  for (const RatedEvent& e : st.b_only) total += e.rate;
  st.total = total;
}

double MicroCoupler::total_rate() const {
  double s = 0.0;
  for (const SiteTable& st : sites_) s += st.total;
  return s;
}

void MicroCoupler::apply_side(bool side_a, const RatedEvent& e) {
  const Model& m = side_a ? a_ : b_;
  Configuration& c = side_a ? sigma_ : eta_;
  (side_a ? fa_ : fb_).on_event(c, m.shape(), e);
  const UpdateDiff diff = apply_update(c, m.shape(), e.ev);
  for (int i = 0; i < diff.n; ++i)
    m.affected_sites(diff.site[static_cast<std::size_t>(i)], scratch_);
}

void MicroCoupler::step(RngStream& rng, double total) {
  check(total > 0.0, "coupled step with zero total rate");
  double r = rng.uniform01() * total;

  // Walk sites, then branches within the site: per pair joint, A residual,
  // B residual; then unmatched A events; then unmatched B events.
  const RatedEvent* ea = nullptr;
  const RatedEvent* eb = nullptr;
  const RatedEvent* fallback_a = nullptr;
  const RatedEvent* fallback_b = nullptr;
  for (std::size_t x = 0; x < sites_.size() && !ea && !eb; ++x) {
    const SiteTable& st = sites_[x];
    if (x + 1 < sites_.size() && r >= st.total) {
      r -= st.total;
      continue;
    }
    for (const Pair& p : st.pairs) {
      if (p.joint > 0.0) {
        fallback_a = &p.a;
        fallback_b = &p.b;
        if (r < p.joint) {
          ea = &p.a;
          eb = &p.b;
          break;
        }
        r -= p.joint;
      }
      const double res_a = p.a.rate - p.joint;
      if (res_a > 0.0) {
        fallback_a = &p.a;
        fallback_b = nullptr;
        if (r < res_a) {
          ea = &p.a;
          break;
        }
        r -= res_a;
      }
      const double res_b = p.b.rate - p.joint;
      if (res_b > 0.0) {
        fallback_a = nullptr;
        fallback_b = &p.b;
        if (r < res_b) {
          eb = &p.b;
          break;
        }
        r -= res_b;
      }
    }
    if (ea || eb) break;
    for (const RatedEvent& e : st.a_only) {
      if (e.rate > 0.0) {
        fallback_a = &e;
        fallback_b = nullptr;
        if (r < e.rate) {
          ea = &e;
          break;
        }
        r -= e.rate;
      }
    }
    if (ea) break;
    for (const RatedEvent& e : st.b_only) {
      if (e.rate > 0.0) {
        fallback_a = nullptr;
        fallback_b = &e;
        if (r < e.rate) {
          eb = &e;
          break;
        }
        r -= e.rate;
      }
    }
  }
  if (!ea && !eb && !fallback_a && !fallback_b) {
    // Rounding pushed r past every branch and the skip shortcut never touched
    // one; re-walk everything for the last positive branch.
    for (const SiteTable& st : sites_) {
      for (const Pair& p : st.pairs) {
        if (p.joint > 0.0) fallback_a = &p.a, fallback_b = &p.b;
        if (p.a.rate - p.joint > 0.0) fallback_a = &p.a, fallback_b = nullptr;
        if (p.b.rate - p.joint > 0.0) fallback_a = nullptr, fallback_b = &p.b;
      }
      for (const RatedEvent& e : st.a_only)
        if (e.rate > 0.0) fallback_a = &e, fallback_b = nullptr;
      for (const RatedEvent& e : st.b_only)
        if (e.rate > 0.0) fallback_a = nullptr, fallback_b = &e;
    }
  }
  if (!ea && !eb) {  // rounding pushed r past the last positive branch
    ea = fallback_a;
    eb = fallback_b;
  }
  check(ea || eb, "no branch selectable");

  // Copy before refreshes invalidate table references.
  RatedEvent copy_a, copy_b;
  if (ea) copy_a = *ea;
  if (eb) copy_b = *eb;
  scratch_.clear();
  if (ea) apply_side(true, copy_a);
  if (eb) apply_side(false, copy_b);
  std::sort(scratch_.begin(), scratch_.end());
  scratch_.erase(std::unique(scratch_.begin(), scratch_.end()), scratch_.end());
  for (SiteIndex s : scratch_) refresh_site(s);

  ++events_;
  if (++since_rebuild_ >= rebuild_interval_) rebuild();
}

void MicroCoupler::rebuild() {
  for (SiteIndex x = 0; x < sigma_.size(); ++x) refresh_site(x);
  fa_.resync(sigma_);
  fb_.resync(eta_);
  since_rebuild_ = 0;
}

double MicroCoupler::functional_F(double joint_scale) const {
  double f = 0.0;
  for (const SiteTable& st : sites_)
    for (const Pair& p : st.pairs) f += joint_scale * p.joint * p.delta_a * p.delta_b;
  return f;
}

// ---------------------------------------------------------------------------
// ClassCoupler

ClassCoupler::ClassCoupler(const Model& a, const Model& b, Configuration sigma,
                           Configuration eta, const Observable& obs,
                           const Partition& partition, int q,
                           std::uint64_t rebuild_interval)
    : a_(a),
      b_(b),
      sigma_(std::move(sigma)),
      eta_(std::move(eta)),
      obs_(obs),
      partition_(partition),
      q_(q),
      fa_(obs, sigma_),
      fb_(obs, eta_),
      rebuild_interval_(rebuild_interval) {
  require_compatible(a_, b_, sigma_, eta_);
  const int n = sigma_.size();
  if (q_ < 1 || q_ > n) throw ConfigError("coupling cell size q must lie in [1, N]");
  if (n % q_ != 0) throw ConfigError("coupling cell size q must divide the site count");
  cells_ = n / q_;
  classes_ = partition_.size();
  for (int s = 0; s < 2; ++s) {
    side_[s].assign(static_cast<std::size_t>(n), {});
    lam_[s].assign(static_cast<std::size_t>(cells_ * classes_), 0.0);
    wdelta_[s].assign(static_cast<std::size_t>(cells_ * classes_), 0.0);
  }
  rebuild();
}

void ClassCoupler::refresh_site(bool side_a, SiteIndex x) {
  SideSite& ss = side_[side_a ? 0 : 1][static_cast<std::size_t>(x)];
  const Model& m = side_a ? a_ : b_;
  const Configuration& c = side_a ? sigma_ : eta_;
  ss.events.clear();
  ss.cls.clear();
  ss.class_rate.assign(static_cast<std::size_t>(classes_), 0.0);
  ss.class_wdelta.assign(static_cast<std::size_t>(classes_), 0.0);
  m.events_at(c, x, ss.events);
  for (const RatedEvent& e : ss.events) {
    check(e.rate >= 0.0, "negative event rate");
    const double d = obs_.delta(c, m.shape(), e);
    const int k = partition_.classify(d);
    ss.cls.push_back(k);
    ss.class_rate[static_cast<std::size_t>(k)] += e.rate;
    ss.class_wdelta[static_cast<std::size_t>(k)] += e.rate * d;
  }
}

void ClassCoupler::recompute_cell(bool side_a, int cell) {
  const int s = side_a ? 0 : 1;
  for (int k = 0; k < classes_; ++k) {
    double lam = 0.0, wd = 0.0;
    for (SiteIndex x = cell * q_; x < (cell + 1) * q_; ++x) {
      const SideSite& ss = side_[s][static_cast<std::size_t>(x)];
      lam += ss.class_rate[static_cast<std::size_t>(k)];
      wd += ss.class_wdelta[static_cast<std::size_t>(k)];
    }
    lam_[s][static_cast<std::size_t>(cell * classes_ + k)] = lam;
    wdelta_[s][static_cast<std::size_t>(cell * classes_ + k)] = wd;
  }
}

void ClassCoupler::rebuild() {
  for (int s = 0; s < 2; ++s) {
    for (SiteIndex x = 0; x < sigma_.size(); ++x) refresh_site(s == 0, x);
    for (int i = 0; i < cells_; ++i) recompute_cell(s == 0, i);
  }
  fa_.resync(sigma_);
  fb_.resync(eta_);
  since_rebuild_ = 0;
}

double ClassCoupler::total_rate() const {
  double s = 0.0;
  for (int i = 0; i < cells_; ++i)
    for (int k = 0; k < classes_; ++k) {
      const double la = lam_[0][static_cast<std::size_t>(i * classes_ + k)];
      const double lb = lam_[1][static_cast<std::size_t>(i * classes_ + k)];
      s += la + lb - std::min(la, lb);
    }
  return s;
}

const RatedEvent* ClassCoupler::select_in_class(bool side_a, int cell, int cls,
                                                double r) const {
  const int s = side_a ? 0 : 1;
  const RatedEvent* last = nullptr;
  for (SiteIndex x = cell * q_; x < (cell + 1) * q_; ++x) {
    const SideSite& ss = side_[s][static_cast<std::size_t>(x)];
    for (std::size_t e = 0; e < ss.events.size(); ++e) {
      if (ss.cls[e] != cls || ss.events[e].rate <= 0.0) continue;
      last = &ss.events[e];
      if (r < ss.events[e].rate) return last;
      r -= ss.events[e].rate;
    }
  }
  check(last != nullptr, "class selection found no event with positive rate");
  return last;
}

void ClassCoupler::apply_side(bool side_a, const RatedEvent& e) {
  const Model& m = side_a ? a_ : b_;
  Configuration& c = side_a ? sigma_ : eta_;
  (side_a ? fa_ : fb_).on_event(c, m.shape(), e);
  const UpdateDiff diff = apply_update(c, m.shape(), e.ev);
  scratch_.clear();
  for (int i = 0; i < diff.n; ++i)
    m.affected_sites(diff.site[static_cast<std::size_t>(i)], scratch_);
  std::sort(scratch_.begin(), scratch_.end());
  scratch_.erase(std::unique(scratch_.begin(), scratch_.end()), scratch_.end());
  dirty_cells_.clear();
  for (SiteIndex x : scratch_) {
    refresh_site(side_a, x);
    dirty_cells_.push_back(x / q_);
  }
  std::sort(dirty_cells_.begin(), dirty_cells_.end());
  dirty_cells_.erase(std::unique(dirty_cells_.begin(), dirty_cells_.end()),
                     dirty_cells_.end());
  for (int i : dirty_cells_) recompute_cell(side_a, i);
}

void ClassCoupler::step(RngStream& rng, double total) {
  check(total > 0.0, "coupled step with zero total rate");
  double r = rng.uniform01() * total;

  int sel_cell = -1, sel_cls = 0;
  enum { kJoint, kResA, kResB } sel_branch = kJoint;
  int fb_cell = -1, fb_cls = 0;
  int fb_branch = kJoint;
  for (int i = 0; i < cells_ && sel_cell < 0; ++i) {
    for (int k = 0; k < classes_; ++k) {
      const double la = lam_[0][static_cast<std::size_t>(i * classes_ + k)];
      const double lb = lam_[1][static_cast<std::size_t>(i * classes_ + k)];
      const double m = std::min(la, lb);
      check(la >= 0.0 && lb >= 0.0, "negative class rate");
      if (m > 0.0) {
        fb_cell = i, fb_cls = k, fb_branch = kJoint;
        if (r < m) {
          sel_cell = i, sel_cls = k, sel_branch = kJoint;
          break;
        }
        r -= m;
      }
      if (la - m > 0.0) {
        fb_cell = i, fb_cls = k, fb_branch = kResA;
        if (r < la - m) {
          sel_cell = i, sel_cls = k, sel_branch = kResA;
          break;
        }
        r -= la - m;
      }
      if (lb - m > 0.0) {
        fb_cell = i, fb_cls = k, fb_branch = kResB;
        if (r < lb - m) {
          sel_cell = i, sel_cls = k, sel_branch = kResB;
          break;
        }
        r -= lb - m;
      }
    }
  }
  if (sel_cell < 0) {  // rounding fallback
    check(fb_cell >= 0, "no branch selectable");
    sel_cell = fb_cell, sel_cls = fb_cls, sel_branch = static_cast<decltype(sel_branch)>(fb_branch);
  }

  const double la = lam_[0][static_cast<std::size_t>(sel_cell * classes_ + sel_cls)];
  const double lb = lam_[1][static_cast<std::size_t>(sel_cell * classes_ + sel_cls)];
  if (sel_branch == kJoint) {
    // Independent within-class selections; sigma side first.
    const RatedEvent ea = *select_in_class(true, sel_cell, sel_cls, rng.uniform01() * la);
    const RatedEvent eb = *select_in_class(false, sel_cell, sel_cls, rng.uniform01() * lb);
    apply_side(true, ea);
    apply_side(false, eb);
  } else if (sel_branch == kResA) {
    const RatedEvent ea = *select_in_class(true, sel_cell, sel_cls, rng.uniform01() * la);
    apply_side(true, ea);
  } else {
    const RatedEvent eb = *select_in_class(false, sel_cell, sel_cls, rng.uniform01() * lb);
    apply_side(false, eb);
  }

  ++events_;
  if (++since_rebuild_ >= rebuild_interval_) rebuild();
}

double ClassCoupler::functional_F(double joint_scale) const {
  double f = 0.0;
  for (int i = 0; i < cells_; ++i)
    for (int k = 0; k < classes_; ++k) {
      const std::size_t at = static_cast<std::size_t>(i * classes_ + k);
      const double la = lam_[0][at], lb = lam_[1][at];
      const double m = joint_scale * std::min(la, lb);
      if (m <= 0.0 || la <= 0.0 || lb <= 0.0) continue;
      f += m * (wdelta_[0][at] / la) * (wdelta_[1][at] / lb);
    }
  return f;
}

// ---------------------------------------------------------------------------
// Dispatch

std::unique_ptr<CoupledProcess> make_coupled(const CouplingScheme& scheme, const Model& a,
                                             const Model& b, Configuration sigma,
                                             Configuration eta, const Observable& obs,
                                             const Partition& partition,
                                             std::uint64_t rebuild_interval) {
  switch (scheme.kind) {
    case SchemeKind::trivial:
      return std::make_unique<MicroCoupler>(a, b, std::move(sigma), std::move(eta), obs,
                                            MicroCoupler::JointMode::none, rebuild_interval);
    case SchemeKind::micro_unopt:
      return std::make_unique<MicroCoupler>(a, b, std::move(sigma), std::move(eta), obs,
                                            MicroCoupler::JointMode::unopt, rebuild_interval);
    case SchemeKind::micro_opt:
      return std::make_unique<ClassCoupler>(a, b, std::move(sigma), std::move(eta), obs,
                                            partition, 1, rebuild_interval);
    case SchemeKind::coarse:
      return std::make_unique<ClassCoupler>(a, b, std::move(sigma), std::move(eta), obs,
                                            partition, scheme.q, rebuild_interval);
    case SchemeKind::macro: {
      const int q = sigma.size();  // read before the move below
      return std::make_unique<ClassCoupler>(a, b, std::move(sigma), std::move(eta), obs,
                                            partition, q, rebuild_interval);
    }
    case SchemeKind::uncoupled:
    case SchemeKind::crn: break;
  }
  throw ConfigError("scheme '" + scheme.label() + "' is not a Markov-coupled process");
}

namespace {

PairResult run_coupled(CoupledProcess& cp, const Grid& grid, RngStream& rng) {
  const std::size_t n = grid.size();
  PairResult out;
  out.f_sigma.resize(n);
  out.f_eta.resize(n);
  double t = 0.0;
  std::size_t g = 0;
  while (g < n) {
    const double total = cp.total_rate();
    if (total <= 0.0) {
      while (g < n) {
        out.f_sigma[g] = cp.f_sigma();
        out.f_eta[g] = cp.f_eta();
        ++g;
      }
      break;
    }
    const double tnext = t + rng.exp_time(total);
    while (g < n && grid.times[g] <= tnext) {
      out.f_sigma[g] = cp.f_sigma();
      out.f_eta[g] = cp.f_eta();
      ++g;
    }
    if (g == n) break;
    cp.step(rng, total);
    t = tnext;
  }
  out.events = cp.events();
  out.sigma_final = cp.sigma();
  out.eta_final = cp.eta();
  return out;
}

}  // namespace

PairResult simulate_pair(const CouplingScheme& scheme, const Model& a, const Model& b,
                         const Configuration& sigma0, const Configuration& eta0,
                         const Observable& obs, const Partition& partition, const Grid& grid,
                         std::uint64_t master_seed, std::uint64_t path_index,
                         std::uint64_t rebuild_interval) {
  switch (scheme.kind) {
    case SchemeKind::uncoupled: {
      RngStream ra(derive_seed(master_seed, path_index, 0));
      RngStream rb(derive_seed(master_seed, path_index, 1));
      return simulate_pair_uncoupled(a, b, sigma0, eta0, obs, grid, ra, rb);
    }
    case SchemeKind::crn: {
      RngStream shared(derive_seed(master_seed, path_index, 0));
      return simulate_pair_crn(a, b, sigma0, eta0, obs, grid, shared);
    }
    default: {
      RngStream rng(derive_seed(master_seed, path_index, 0));
      auto cp = make_coupled(scheme, a, b, sigma0, eta0, obs, partition, rebuild_interval);
      return run_coupled(*cp, grid, rng);
    }
  }
}

double functional_F(const CouplingScheme& scheme, const Model& a, const Model& b,
                    const Configuration& sigma, const Configuration& eta,
                    const Observable& obs, const Partition& partition) {
  switch (scheme.kind) {
    case SchemeKind::uncoupled:
    case SchemeKind::trivial:
      return 0.0;  // c == 0
    case SchemeKind::crn:
      throw ConfigError("the coupling functional is undefined for crn");
    case SchemeKind::micro_unopt: {
      MicroCoupler mc(a, b, sigma, eta, obs, MicroCoupler::JointMode::unopt);
      return mc.functional_F();
    }
    case SchemeKind::micro_opt:
    case SchemeKind::coarse:
    case SchemeKind::macro: {
      const int q = scheme.kind == SchemeKind::macro ? sigma.size()
                    : scheme.kind == SchemeKind::micro_opt ? 1
                                                           : scheme.q;
      ClassCoupler cc(a, b, sigma, eta, obs, partition, q);
      return cc.functional_F();
    }
  }
  throw ConfigError("unknown scheme");
}

std::vector<ChainPoint> functional_F_chain(const Model& a, const Model& b,
                                           const Configuration& sigma,
                                           const Configuration& eta, const Observable& obs,
                                           const Partition& partition,
                                           const std::vector<int>& granularities) {
  require_compatible(a, b, sigma, eta);
  if (!obs.count_based())
    throw ConfigError("the chain evaluator needs a count observable");
  const int n = sigma.size();

  // Per site and side: events with their class and unit increment.
  struct Ev {
    EventType type;
    std::uint8_t slot;
    double rate;
    int cls;
    int inc;
  };
  std::vector<std::vector<Ev>> evs[2];
  evs[0].resize(static_cast<std::size_t>(n));
  evs[1].resize(static_cast<std::size_t>(n));
  const int classes = partition.size();
  std::vector<int> class_inc(static_cast<std::size_t>(classes), 2);  // 2 = unset
  std::vector<RatedEvent> buf;
  for (int s = 0; s < 2; ++s) {
    const Model& m = s == 0 ? a : b;
    const Configuration& c = s == 0 ? sigma : eta;
    for (SiteIndex x = 0; x < n; ++x) {
      buf.clear();
      m.events_at(c, x, buf);
      for (const RatedEvent& e : buf) {
        const long long d = obs.delta_count(c, m.shape(), e);
        if (d < -1 || d > 1)
          throw ConfigError("the chain evaluator needs increments in {-1, 0, +1}");
        const int k = partition.classify(obs.delta(c, m.shape(), e));
        int& known = class_inc[static_cast<std::size_t>(k)];
        if (known == 2) known = static_cast<int>(d);
        else if (known != static_cast<int>(d))
          throw ConfigError("the chain evaluator needs one increment per class");
        evs[s][static_cast<std::size_t>(x)].push_back(
            {e.type, e.slot, e.rate, k, static_cast<int>(d)});
      }
    }
  }

  const double inv_n2 = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
  std::vector<ChainPoint> out;
  out.reserve(granularities.size());
  for (int g : granularities) {
    ChainPoint pt;
    pt.granularity = g;
    if (g == -1) {
      // Site pairing: joint min(c_A, c_B) per matching (type, slot), signed
      // by the product of the two increments.
      for (SiteIndex x = 0; x < n; ++x) {
        for (const Ev& ea : evs[0][static_cast<std::size_t>(x)])
          for (const Ev& eb : evs[1][static_cast<std::size_t>(x)]) {
            if (ea.type != eb.type || ea.slot != eb.slot) continue;
            const int sign = ea.inc * eb.inc;
            if (sign == 0) continue;
            const double m = std::min(ea.rate, eb.rate);
            pt.numerator.add(sign > 0 ? m : -m);
          }
      }
    } else {
      if (g < 1 || g > n || n % g != 0)
        throw ConfigError("chain granularity must be -1 or a divisor of N");
      const int cells = n / g;
      for (int i = 0; i < cells; ++i) {
        for (int k = 0; k < classes; ++k) {
          if (class_inc[static_cast<std::size_t>(k)] == 0 ||
              class_inc[static_cast<std::size_t>(k)] == 2)
            continue;  // zero-increment classes contribute nothing
          ExactSum la, lb;
          for (SiteIndex x = i * g; x < (i + 1) * g; ++x) {
            for (const Ev& e : evs[0][static_cast<std::size_t>(x)])
              if (e.cls == k) la.add(e.rate);
            for (const Ev& e : evs[1][static_cast<std::size_t>(x)])
              if (e.cls == k) lb.add(e.rate);
          }
          // The increment product within one class is +(1/N)^2, so the term
          // is just the smaller aggregate rate.
          pt.numerator.add(la.compare(lb) <= 0 ? la : lb);
        }
      }
    }
    pt.value = pt.numerator.round() * inv_n2;
    out.push_back(std::move(pt));
  }
  return out;
}

FeasibilityReport check_feasibility(const CouplingScheme& scheme, const Model& a,
                                    const Model& b, const Configuration& sigma,
                                    const Configuration& eta, const Observable& obs,
                                    const Partition& partition, double joint_scale) {
  FeasibilityReport rep;
  auto fail = [&rep](std::string msg) {
    if (rep.ok) {
      rep.ok = false;
      rep.violation = std::move(msg);
    }
  };

  switch (scheme.kind) {
    case SchemeKind::uncoupled:
    case SchemeKind::trivial:
      return rep;  // c == 0 is always feasible
    case SchemeKind::crn:
      throw ConfigError("feasibility is undefined for crn");
    case SchemeKind::micro_unopt: {
      MicroCoupler mc(a, b, sigma, eta, obs, MicroCoupler::JointMode::unopt);
      for (SiteIndex x = 0; x < sigma.size() && rep.ok; ++x) {
        for (const MicroCoupler::Pair& p : mc.site(x).pairs) {
          const double j = joint_scale * p.joint;
          if (j < 0.0)
            fail("site " + std::to_string(x) + " " + event_type_name(p.a.type) +
                 ": joint rate is negative");
          else if (j > p.a.rate)
            fail("site " + std::to_string(x) + " " + event_type_name(p.a.type) +
                 ": row sum exceeds c_A");
          else if (j > p.b.rate)
            fail("site " + std::to_string(x) + " " + event_type_name(p.b.type) +
                 ": column sum exceeds c_B");
          if (!rep.ok) break;
        }
      }
      return rep;
    }
    case SchemeKind::micro_opt:
    case SchemeKind::coarse:
    case SchemeKind::macro: {
      const int q = scheme.kind == SchemeKind::macro ? sigma.size()
                    : scheme.kind == SchemeKind::micro_opt ? 1
                                                           : scheme.q;
      ClassCoupler cc(a, b, sigma, eta, obs, partition, q);
      for (int i = 0; i < cc.cells() && rep.ok; ++i) {
        for (int k = 0; k < cc.classes(); ++k) {
          const double la = cc.lambda(true, i, k), lb = cc.lambda(false, i, k);
          const double m = joint_scale * std::min(la, lb);
          // Row sums for events in S_{k,i}(sigma) are m * c / lambda_A, so
          // the exact per-event bound row <= c is equivalent to m <= lambda_A
          // (and symmetrically for columns).
          if (m < 0.0)
            fail("cell " + std::to_string(i) + " class " + std::to_string(k) +
                 ": joint rate is negative");
          else if (m > la)
            fail("cell " + std::to_string(i) + " class " + std::to_string(k) +
                 ": row sums exceed c_A");
          else if (m > lb)
            fail("cell " + std::to_string(i) + " class " + std::to_string(k) +
                 ": column sums exceed c_B");
          if (!rep.ok) break;
        }
      }
      return rep;
    }
  }
  throw ConfigError("unknown scheme");
}

}  // namespace kmc
