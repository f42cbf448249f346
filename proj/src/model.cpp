#include "kmc/model.hpp"

#include <cmath>

#include "kmc/errors.hpp"

namespace kmc {

double Params::get(Param p) const {
  switch (p) {
    case Param::beta: return beta;
    case Param::J: return J;
    case Param::h: return h;
    case Param::c_a: return c_a;
    case Param::c_d: return c_d;
    case Param::c_diff: return c_diff;
    case Param::c_r: return c_r;
  }
  throw InvariantError("unknown parameter");
}

void Params::set(Param p, double v) {
  switch (p) {
    case Param::beta: beta = v; return;
    case Param::J: J = v; return;
    case Param::h: h = v; return;
    case Param::c_a: c_a = v; return;
    case Param::c_d: c_d = v; return;
    case Param::c_diff: c_diff = v; return;
    case Param::c_r: c_r = v; return;
  }
  throw InvariantError("unknown parameter");
}

const char* param_name(Param p) {
  switch (p) {
    case Param::beta: return "beta";
    case Param::J: return "J";
    case Param::h: return "h";
    case Param::c_a: return "c_a";
    case Param::c_d: return "c_d";
    case Param::c_diff: return "c_diff";
    case Param::c_r: return "c_r";
  }
  return "?";
}

std::optional<Param> parse_param(std::string_view name) {
  for (Param p : {Param::beta, Param::J, Param::h, Param::c_a, Param::c_d, Param::c_diff,
                  Param::c_r})
    if (name == param_name(p)) return p;
  return std::nullopt;
}

Params perturb(const Params& theta, const Perturbation& dir) {
  Params out = theta;
  out.set(dir.param, out.get(dir.param) + dir.step);
  return out;
}

const char* model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::ising_ad: return "ising_ad";
    case ModelKind::ad_diffusion: return "ad_diffusion";
    case ModelKind::zgb: return "zgb";
    case ModelKind::evans_co: return "evans_co";
  }
  return "?";
}

std::optional<ModelKind> parse_model_kind(std::string_view name) {
  for (ModelKind k : {ModelKind::ising_ad, ModelKind::ad_diffusion, ModelKind::zgb,
                      ModelKind::evans_co})
    if (name == model_kind_name(k)) return k;
  return std::nullopt;
}

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

// Writes v at slot i and at every other slot wrapped onto the same site, so
// that events stay well formed on lattices whose side does not exceed the
// shape diameter (apply_update lets the later duplicate slot win).
void write_slot(const NeighborSites& ns, LocalConfiguration& w, int i, Species v) {
  const SiteIndex s = ns.s[static_cast<std::size_t>(i)];
  for (int j = 0; j < ns.n; ++j)
    if (ns.s[static_cast<std::size_t>(j)] == s) w[j] = v;
}

}  // namespace

Model::Model(ModelKind kind, const Lattice& lattice, const Params& params)
    : kind_(kind), lattice_(lattice), params_(params) {
  switch (kind_) {
    case ModelKind::ising_ad:
    case ModelKind::ad_diffusion:
      shape_ = lattice_.dimension() == 1 ? &NeighborhoodShape::line3()
                                         : &NeighborhoodShape::cross5();
      species_ = SpeciesSet{{0, 1}, 0};
      require(params_.c_a >= 0.0, "c_a must be >= 0");
      require(params_.c_d >= 0.0, "c_d must be >= 0");
      if (kind_ == ModelKind::ad_diffusion)
        require(params_.c_diff >= 0.0, "c_diff must be >= 0");
      break;
    case ModelKind::zgb:
      require(lattice_.dimension() == 2, "zgb requires a 2D lattice");
      shape_ = &NeighborhoodShape::cross5();
      species_ = SpeciesSet{{-1, 0, 1}, 0};
      require(params_.c_a >= 0.0 && params_.c_a <= 1.0,
              "zgb c_a must lie in [0,1] (O2 rate is 1-c_a)");
      require(params_.c_r >= 0.0, "c_r must be >= 0");
      break;
    case ModelKind::evans_co:
      require(lattice_.dimension() == 2, "evans_co requires a 2D lattice");
      shape_ = &NeighborhoodShape::star17();
      species_ = SpeciesSet{{-1, 0, 1}, 0};
      require(params_.c_a >= 0.0 && params_.c_a <= 1.0,
              "evans_co c_a must lie in [0,1] (O2 rate is 1-c_a)");
      require(params_.c_d >= 0.0, "c_d must be >= 0");
      require(params_.c_diff >= 0.0, "c_diff must be >= 0");
      require(params_.c_r >= 0.0, "c_r must be >= 0");
      break;
  }
}

double Model::ising_rate(const Configuration& sigma, SiteIndex x) const {
  check(kind_ == ModelKind::ising_ad || kind_ == ModelKind::ad_diffusion,
        "ising_rate is defined for the adsorption/desorption models only");
  if (sigma[x] == 0) return params_.c_a;
  // Occupied: desorption at c_d * exp(-beta (J * neighbor_sum - h)). Every
  // axis slot is counted, so on a side-2 ring the single neighbor counts twice.
  NeighborSites ns = neighborhood_sites(lattice_, *shape_, x);
  int nsum = 0;
  for (int i = 1; i < ns.n; ++i) nsum += sigma[ns.s[static_cast<std::size_t>(i)]];
  return params_.c_d * std::exp(-params_.beta * (params_.J * nsum - params_.h));
}

double Model::diffusion_rate(const Configuration& sigma, SiteIndex x, SiteIndex y) const {
  check(kind_ == ModelKind::ad_diffusion, "diffusion_rate is defined for ad_diffusion only");
  if (!(sigma[x] == 1 && sigma[y] == 0)) return 0.0;
  NeighborSites ns = neighborhood_sites(lattice_, *shape_, x);
  for (int i = 1; i < ns.n; ++i)
    if (ns.s[static_cast<std::size_t>(i)] == y) return params_.c_diff;
  return 0.0;
}

void Model::ising_events_at(const Configuration& sigma, SiteIndex x,
                            std::vector<RatedEvent>& out) const {
  NeighborSites ns = neighborhood_sites(lattice_, *shape_, x);
  LocalConfiguration local(ns.n);
  for (int i = 0; i < ns.n; ++i) local[i] = sigma[ns.s[static_cast<std::size_t>(i)]];

  RatedEvent fl;
  fl.ev.site = x;
  fl.ev.omega = local;
  write_slot(ns, fl.ev.omega, 0, sigma[x] ? 0 : 1);
  fl.rate = ising_rate(sigma, x);
  fl.type = EventType::flip;
  fl.occ_delta = sigma[x] ? -1 : 1;
  out.push_back(fl);

  if (kind_ != ModelKind::ad_diffusion || sigma[x] != 1) return;
  // Occupied -> vacant hops only; hops onto occupied sites are null events
  // and never enter the catalog.
  for (int i = 1; i < ns.n; ++i) {
    const SiteIndex y = ns.s[static_cast<std::size_t>(i)];
    if (sigma[y] != 0 || y == x) continue;
    RatedEvent hop;
    hop.ev.site = x;
    hop.ev.omega = local;
    write_slot(ns, hop.ev.omega, 0, 0);
    write_slot(ns, hop.ev.omega, i, 1);
    hop.rate = params_.c_diff;
    hop.type = EventType::exchange;
    hop.slot = static_cast<std::uint8_t>(i);
    hop.occ_delta = 0;
    out.push_back(hop);
  }
}

void Model::zgb_events_at(const Configuration& sigma, SiteIndex x,
                          std::vector<RatedEvent>& out) const {
  NeighborSites ns = neighborhood_sites(lattice_, *shape_, x);
  LocalConfiguration local(ns.n);
  for (int i = 0; i < ns.n; ++i) local[i] = sigma[ns.s[static_cast<std::size_t>(i)]];
  const Species kCO = -1, kO = 1;

  if (sigma[x] == 0) {
    RatedEvent ads;
    ads.ev.site = x;
    ads.ev.omega = local;
    write_slot(ns, ads.ev.omega, 0, kCO);
    ads.rate = params_.c_a;
    ads.type = EventType::co_adsorb;
    ads.occ_delta = 1;
    out.push_back(ads);

    // O2 lands on an axis pair of vacancies. Each unordered pair is emitted
    // once, from its lower-indexed site.
    for (int i = 1; i < ns.n; ++i) {
      const SiteIndex y = ns.s[static_cast<std::size_t>(i)];
      if (sigma[y] != 0 || !(x < y)) continue;
      RatedEvent o2;
      o2.ev.site = x;
      o2.ev.omega = local;
      write_slot(ns, o2.ev.omega, 0, kO);
      write_slot(ns, o2.ev.omega, i, kO);
      o2.rate = 1.0 - params_.c_a;
      o2.type = EventType::o2_adsorb;
      o2.slot = static_cast<std::uint8_t>(i);
      o2.occ_delta = 2;
      out.push_back(o2);
    }
    return;
  }

  // CO next to O (either orientation) reacts and vacates the pair; the two
  // orientations are distinct events, so a pair reacts at total rate 2 c_r.
  const Species partner = (sigma[x] == kCO) ? kO : kCO;
  for (int i = 1; i < ns.n; ++i) {
    const SiteIndex y = ns.s[static_cast<std::size_t>(i)];
    if (sigma[y] != partner) continue;
    RatedEvent rx;
    rx.ev.site = x;
    rx.ev.omega = local;
    write_slot(ns, rx.ev.omega, 0, 0);
    write_slot(ns, rx.ev.omega, i, 0);
    rx.rate = params_.c_r;
    rx.type = EventType::react;
    rx.slot = static_cast<std::uint8_t>(i);
    rx.occ_delta = -2;
    out.push_back(rx);
  }
}

void Model::evans_events_at(const Configuration& sigma, SiteIndex x,
                            std::vector<RatedEvent>& out) const {
  NeighborSites ns = neighborhood_sites(lattice_, *shape_, x);
  LocalConfiguration local(ns.n);
  for (int i = 0; i < ns.n; ++i) local[i] = sigma[ns.s[static_cast<std::size_t>(i)]];
  const Species kCO = -1, kO = 1;
  constexpr int axis_slots[4] = {1, 3, 5, 7};
  constexpr int diag_slots[4] = {2, 4, 6, 8};

  if (sigma[x] == 0) {
    RatedEvent ads;
    ads.ev.site = x;
    ads.ev.omega = local;
    write_slot(ns, ads.ev.omega, 0, kCO);
    ads.rate = params_.c_a;
    ads.type = EventType::co_adsorb;
    ads.occ_delta = 1;
    out.push_back(ads);

    // O2 lands on a diagonal pair of vacancies whose far endpoint has all
    // four axis neighbors vacant. The two orientations of a diagonal pair
    // have different preconditions and are both enumerated.
    for (int d : diag_slots) {
      const SiteIndex y = ns.s[static_cast<std::size_t>(d)];
      if (y == x || sigma[y] != 0) continue;
      bool clear = true;
      for (int j : NeighborhoodShape::star17_diagonal_adjacent(d))
        if (sigma[ns.s[static_cast<std::size_t>(j)]] != 0) clear = false;
      if (!clear) continue;
      RatedEvent o2;
      o2.ev.site = x;
      o2.ev.omega = local;
      write_slot(ns, o2.ev.omega, 0, kO);
      write_slot(ns, o2.ev.omega, d, kO);
      o2.rate = 1.0 - params_.c_a;
      o2.type = EventType::o2_adsorb;
      o2.slot = static_cast<std::uint8_t>(d);
      o2.occ_delta = 2;
      out.push_back(o2);
    }
    return;
  }

  if (sigma[x] == kCO) {
    for (int i : axis_slots) {
      const SiteIndex y = ns.s[static_cast<std::size_t>(i)];
      if (sigma[y] != 0 || y == x) continue;
      RatedEvent hop;
      hop.ev.site = x;
      hop.ev.omega = local;
      write_slot(ns, hop.ev.omega, 0, 0);
      write_slot(ns, hop.ev.omega, i, kCO);
      hop.rate = params_.c_diff;
      hop.type = EventType::co_diffuse;
      hop.slot = static_cast<std::uint8_t>(i);
      hop.occ_delta = 0;
      out.push_back(hop);
    }
    RatedEvent des;
    des.ev.site = x;
    des.ev.omega = local;
    write_slot(ns, des.ev.omega, 0, 0);
    des.rate = params_.c_d;
    des.type = EventType::co_desorb;
    des.occ_delta = -1;
    out.push_back(des);
  }

  const Species partner = (sigma[x] == kCO) ? kO : kCO;
  for (int i : axis_slots) {
    const SiteIndex y = ns.s[static_cast<std::size_t>(i)];
    if (sigma[y] != partner) continue;
    RatedEvent rx;
    rx.ev.site = x;
    rx.ev.omega = local;
    write_slot(ns, rx.ev.omega, 0, 0);
    write_slot(ns, rx.ev.omega, i, 0);
    rx.rate = params_.c_r;
    rx.type = EventType::react;
    rx.slot = static_cast<std::uint8_t>(i);
    rx.occ_delta = -2;
    out.push_back(rx);
  }
}

void Model::events_at(const Configuration& sigma, SiteIndex x,
                      std::vector<RatedEvent>& out) const {
  switch (kind_) {
    case ModelKind::ising_ad:
    case ModelKind::ad_diffusion: ising_events_at(sigma, x, out); return;
    case ModelKind::zgb: zgb_events_at(sigma, x, out); return;
    case ModelKind::evans_co: evans_events_at(sigma, x, out); return;
  }
}

std::vector<RatedEvent> Model::enumerate_events(const Configuration& sigma) const {
  std::vector<RatedEvent> out;
  for (SiteIndex x = 0; x < lattice_.size(); ++x) events_at(sigma, x, out);
  return out;
}

double Model::total_rate(const Configuration& sigma) const {
  double sum = 0.0;
  std::vector<RatedEvent> buf;
  for (SiteIndex x = 0; x < lattice_.size(); ++x) {
    buf.clear();
    events_at(sigma, x, buf);
    for (const RatedEvent& e : buf) sum += e.rate;
  }
  return sum;
}

void Model::affected_sites(SiteIndex changed, std::vector<SiteIndex>& out) const {
  const int r = lattice_.row(changed), c = lattice_.col(changed);
  for (const Offset& o : shape_->offsets())
    out.push_back(lattice_.site(r - o.dr, c - o.dc));
}

}  // namespace kmc
