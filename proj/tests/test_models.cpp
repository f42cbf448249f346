#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "kmc/errors.hpp"
#include "kmc/model.hpp"

using namespace kmc;

namespace {

Configuration random_config(const Lattice& g, const SpeciesSet& species, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, species.values.size() - 1);
  Configuration sigma(g, species.vacant);
  for (SiteIndex x = 0; x < g.size(); ++x) sigma[x] = species.values[pick(rng)];
  return sigma;
}

int occupied_count(const Configuration& sigma) {
  int n = 0;
  for (SiteIndex x = 0; x < sigma.size(); ++x)
    if (sigma[x] != 0) ++n;
  return n;
}

// Independent recomputation of the adsorption/desorption rate, written against
// lattice coordinates instead of neighborhood slots.
double flip_rate_reference(const Configuration& s, const Params& p, SiteIndex x) {
  if (s[x] == 0) return p.c_a;
  const Lattice& g = s.lattice();
  int nsum = 0;
  if (g.dimension() == 1) {
    nsum = s[g.site(0, g.col(x) - 1)] + s[g.site(0, g.col(x) + 1)];
  } else {
    const int r = g.row(x), c = g.col(x);
    nsum = s[g.site(r - 1, c)] + s[g.site(r + 1, c)] + s[g.site(r, c - 1)] +
           s[g.site(r, c + 1)];
  }
  return p.c_d * std::exp(-p.beta * (p.J * nsum - p.h));
}

std::vector<SiteIndex> axis_neighbors(const Lattice& g, SiteIndex x) {
  if (g.dimension() == 1) return {g.translate(x, 0, -1), g.translate(x, 0, 1)};
  return {g.translate(x, -1, 0), g.translate(x, 1, 0), g.translate(x, 0, -1),
          g.translate(x, 0, 1)};
}

int count_events(const std::vector<RatedEvent>& evs, EventType t) {
  int n = 0;
  for (const RatedEvent& e : evs)
    if (e.type == t) ++n;
  return n;
}

}  // namespace

TEST_CASE("side-2 ring counts its single neighbor on both axis slots") {
  const Lattice ring = Lattice::line(2);
  const Model m(ModelKind::ising_ad, ring, Params{});  // beta = J = h = 1

  Configuration s(ring, 0);
  s[0] = 1;
  // Occupied site: neighbor sum 0, desorption rate e^{beta h} = e.
  // Vacant site: adsorption rate 1.
  CHECK(m.total_rate(s) == doctest::Approx(1.0 + std::exp(1.0)).epsilon(1e-15));

  s[1] = 1;
  // Both occupied; each sees its one neighbor twice, so nsum = 2 and the
  // per-site rate is e^{-beta (2J - h)} = e^{-1}.
  CHECK(m.total_rate(s) == doctest::Approx(2.0 * std::exp(-1.0)).epsilon(1e-15));
}

TEST_CASE("adsorption/desorption rates match a coordinate-based recomputation") {
  Params p;
  p.beta = 0.7;
  p.J = 1.3;
  p.h = 0.4;
  p.c_a = 0.6;
  p.c_d = 1.9;
  p.c_diff = 0.8;

  for (const Lattice& g : {Lattice::grid(4, 5), Lattice::line(7)}) {
    for (ModelKind kind : {ModelKind::ising_ad, ModelKind::ad_diffusion}) {
      const Model m(kind, g, p);
      for (unsigned seed : {11u, 12u, 13u}) {
        const Configuration sigma = random_config(g, m.species(), seed);

        double total = 0.0;
        for (SiteIndex x = 0; x < g.size(); ++x) {
          const double ref = flip_rate_reference(sigma, p, x);
          CHECK(m.ising_rate(sigma, x) == doctest::Approx(ref).epsilon(1e-14));
          total += ref;
          if (kind == ModelKind::ad_diffusion && sigma[x] == 1)
            for (SiteIndex y : axis_neighbors(g, x))
              if (sigma[y] == 0) total += p.c_diff;
        }
        CHECK(m.total_rate(sigma) == doctest::Approx(total).epsilon(1e-12));

        // Summing the enumerated list site by site reproduces total_rate.
        double listed = 0.0;
        for (const RatedEvent& e : m.enumerate_events(sigma)) listed += e.rate;
        CHECK(listed == m.total_rate(sigma));
      }
    }
  }
}

TEST_CASE("hop events exist exactly for occupied-to-vacant axis moves") {
  const Lattice g = Lattice::grid(4, 4);
  const Model m(ModelKind::ad_diffusion, g, Params{});

  Configuration full(g, 1);
  for (const RatedEvent& e : m.enumerate_events(full)) CHECK(e.type == EventType::flip);

  Configuration empty(g, 0);
  const auto evs = m.enumerate_events(empty);
  CHECK(static_cast<SiteIndex>(evs.size()) == g.size());
  for (const RatedEvent& e : evs) CHECK(e.rate == 1.0);  // c_a

  const Configuration sigma = random_config(g, m.species(), 99);
  int expected_hops = 0;
  for (SiteIndex x = 0; x < g.size(); ++x)
    if (sigma[x] == 1)
      for (SiteIndex y : axis_neighbors(g, x))
        if (sigma[y] == 0) ++expected_hops;
  CHECK(count_events(m.enumerate_events(sigma), EventType::exchange) == expected_hops);

  // diffusion_rate agrees with the adjacency/occupancy rule.
  for (SiteIndex x = 0; x < g.size(); ++x)
    for (SiteIndex y = 0; y < g.size(); ++y) {
      const auto nb = axis_neighbors(g, x);
      const bool adj = std::find(nb.begin(), nb.end(), y) != nb.end();
      const double want = (adj && sigma[x] == 1 && sigma[y] == 0) ? 1.0 : 0.0;
      CHECK(m.diffusion_rate(sigma, x, y) == want);
    }
}

TEST_CASE("surface model emits vacancy pairs once and reactions from both ends") {
  const Lattice g = Lattice::grid(3, 3);
  Params p;
  p.c_a = 0.3;
  p.c_r = 2.0;
  const Model m(ModelKind::zgb, g, p);

  const Species kCO = -1, kO = 1;
  Configuration sigma(g, 0);
  sigma[0] = kCO;
  sigma[1] = kO;
  sigma[5] = kCO;
  sigma[6] = kO;

  const auto evs = m.enumerate_events(sigma);
  CHECK(evs.size() == 13);
  CHECK(count_events(evs, EventType::co_adsorb) == 5);
  CHECK(count_events(evs, EventType::o2_adsorb) == 4);
  CHECK(count_events(evs, EventType::react) == 4);
  CHECK(m.total_rate(sigma) == doctest::Approx(12.3).epsilon(1e-14));

  // Each unordered vacancy pair appears once, from its lower-indexed site.
  std::set<std::pair<SiteIndex, SiteIndex>> pairs;
  for (const RatedEvent& e : evs) {
    if (e.type != EventType::o2_adsorb) continue;
    CHECK(e.rate == doctest::Approx(0.7).epsilon(1e-15));
    const NeighborSites ns = neighborhood_sites(g, m.shape(), e.ev.site);
    const SiteIndex y = ns.s[e.slot];
    CHECK(e.ev.site < y);
    pairs.insert({e.ev.site, y});
  }
  CHECK(pairs == std::set<std::pair<SiteIndex, SiteIndex>>{{2, 8}, {3, 4}, {4, 7}, {7, 8}});

  // The CO at site 0 touches O at sites 1 and 6: two events from the CO side
  // and one from each O side, every one at rate c_r.
  int from_co = 0, from_o = 0;
  for (const RatedEvent& e : evs) {
    if (e.type != EventType::react) continue;
    CHECK(e.rate == 2.0);
    (sigma[e.ev.site] == kCO ? from_co : from_o)++;
  }
  CHECK(from_co == 2);
  CHECK(from_o == 2);

  // Applying a reaction vacates exactly the pair.
  for (const RatedEvent& e : evs) {
    if (e.type != EventType::react || e.ev.site != 0) continue;
    Configuration after = sigma;
    apply_update(after, m.shape(), e.ev);
    CHECK(after[0] == 0);
    CHECK(occupied_count(after) == occupied_count(sigma) - 2);
  }
}

TEST_CASE("dissociative adsorption requires a clear landing zone") {
  const Lattice g = Lattice::grid(5, 5);
  const Model m(ModelKind::evans_co, g, Params{.c_a = 0.25});
  const Species kCO = -1, kO = 1;

  Configuration empty(g, 0);
  auto evs = m.enumerate_events(empty);
  CHECK(count_events(evs, EventType::co_adsorb) == 25);
  // Every diagonal of every site qualifies on an empty lattice, and the two
  // orientations of a diagonal pair are distinct events.
  CHECK(count_events(evs, EventType::o2_adsorb) == 100);
  CHECK(evs.size() == 125);
  for (const RatedEvent& e : evs)
    if (e.type == EventType::o2_adsorb) {
      CHECK((e.slot == 2 || e.slot == 4 || e.slot == 6 || e.slot == 8));
      CHECK(e.rate == 0.75);
    }

  // A single CO removes: 1 adsorption + 4 pair events at the CO site, 4 events
  // landing on it, and 4 events onto each of its 4 axis neighbors (the CO
  // spoils their landing zones).
  Configuration one(g, 0);
  one[g.site(2, 2)] = kCO;
  evs = m.enumerate_events(one);
  CHECK(count_events(evs, EventType::co_adsorb) == 24);
  CHECK(count_events(evs, EventType::o2_adsorb) == 76);
  CHECK(count_events(evs, EventType::co_diffuse) == 4);
  CHECK(count_events(evs, EventType::co_desorb) == 1);
  CHECK(count_events(evs, EventType::react) == 0);

  // Orientations have independent preconditions: a blocker next to one
  // endpoint kills only the event landing on that endpoint.
  Configuration blocked(g, 0);
  blocked[g.site(0, 1)] = kO;  // axis neighbor of (1,1)
  evs = m.enumerate_events(blocked);
  bool toward_y = false, toward_x = false;
  for (const RatedEvent& e : evs) {
    if (e.type != EventType::o2_adsorb) continue;
    if (e.ev.site == g.site(1, 1) && e.slot == 4) toward_y = true;  // lands on (2,2)
    if (e.ev.site == g.site(2, 2) && e.slot == 8) toward_x = true;  // lands on (1,1)
  }
  CHECK(toward_y);
  CHECK_FALSE(toward_x);

  // Axis CO|O pair reacts from both ends; a diagonal pair does not react.
  Configuration pair(g, 0);
  pair[g.site(2, 2)] = kCO;
  pair[g.site(2, 3)] = kO;
  evs = m.enumerate_events(pair);
  CHECK(count_events(evs, EventType::react) == 2);
  CHECK(count_events(evs, EventType::co_diffuse) == 3);

  Configuration diag(g, 0);
  diag[g.site(2, 2)] = kCO;
  diag[g.site(1, 3)] = kO;
  CHECK(count_events(m.enumerate_events(diag), EventType::react) == 0);
}

TEST_CASE("occupancy deltas and affected sites track every applied event") {
  struct Case {
    ModelKind kind;
    Lattice lattice;
  };
  const Case cases[] = {
      {ModelKind::ising_ad, Lattice::line(8)},
      {ModelKind::ad_diffusion, Lattice::grid(4, 4)},
      {ModelKind::zgb, Lattice::grid(4, 4)},
      {ModelKind::evans_co, Lattice::grid(5, 5)},
      // Sides at or below the shape diameter wrap slots onto shared sites;
      // events must stay well formed there too.
      {ModelKind::ising_ad, Lattice::line(2)},
      {ModelKind::ad_diffusion, Lattice::grid(2, 2)},
      {ModelKind::zgb, Lattice::grid(2, 2)},
      {ModelKind::evans_co, Lattice::grid(4, 4)},
      {ModelKind::evans_co, Lattice::grid(2, 2)},
  };
  Params p;
  p.c_a = 0.4;
  p.c_d = 1.5;
  p.c_diff = 0.9;
  p.c_r = 1.1;

  for (const Case& c : cases) {
    const Model m(c.kind, c.lattice, p);
    for (unsigned seed : {3u, 4u}) {
      const Configuration sigma = random_config(c.lattice, m.species(), seed);
      std::vector<std::vector<RatedEvent>> before(sigma.size());
      for (SiteIndex x = 0; x < sigma.size(); ++x) m.events_at(sigma, x, before[x]);

      for (const RatedEvent& e : m.enumerate_events(sigma)) {
        CHECK(e.rate > 0.0);
        Configuration after = sigma;
        const UpdateDiff diff = apply_update(after, m.shape(), e.ev);
        CHECK(occupied_count(after) - occupied_count(sigma) == e.occ_delta);
        CHECK(diff.n > 0);  // null events are never enumerated

        std::set<SiteIndex> affected;
        std::vector<SiteIndex> buf;
        for (int i = 0; i < diff.n; ++i) m.affected_sites(diff.site[i], buf);
        affected.insert(buf.begin(), buf.end());

        // Outside the affected set, per-site event lists are untouched.
        for (SiteIndex x = 0; x < sigma.size(); ++x) {
          if (affected.count(x)) continue;
          std::vector<RatedEvent> now;
          m.events_at(after, x, now);
          CHECK(now == before[x]);
        }
      }
    }
  }
}

TEST_CASE("a hop on a side-2 ring moves the particle despite slot aliasing") {
  // Both axis slots of site 0 wrap onto site 1, so the hop event writes the
  // destination through two slots; the particle must land, not vanish.
  const Lattice ring = Lattice::line(2);
  Params p;
  p.c_diff = 0.7;
  const Model m(ModelKind::ad_diffusion, ring, p);
  Configuration s(ring, 0);
  s[0] = 1;

  const auto evs = m.enumerate_events(s);
  CHECK(count_events(evs, EventType::exchange) == 2);  // one per axis slot
  for (const RatedEvent& e : evs) {
    if (e.type != EventType::exchange) continue;
    CHECK(e.rate == 0.7);
    Configuration after = s;
    apply_update(after, m.shape(), e.ev);
    CHECK(after[0] == 0);
    CHECK(after[1] == 1);
  }
}

TEST_CASE("parameter domains are enforced at construction") {
  const Lattice g = Lattice::grid(4, 4);
  CHECK_THROWS_AS(Model(ModelKind::zgb, g, Params{.c_a = 1.2}), ConfigError);
  CHECK_THROWS_AS(Model(ModelKind::evans_co, g, Params{.c_a = -0.1}), ConfigError);
  CHECK_THROWS_AS(Model(ModelKind::ising_ad, g, Params{.c_d = -1.0}), ConfigError);
  CHECK_THROWS_AS(Model(ModelKind::ad_diffusion, g, Params{.c_diff = -0.5}), ConfigError);
  CHECK_THROWS_AS(Model(ModelKind::zgb, Lattice::line(8), Params{}), ConfigError);
  CHECK_THROWS_AS(Model(ModelKind::evans_co, Lattice::line(8), Params{}), ConfigError);
}

TEST_CASE("parameter and model names round-trip") {
  for (Param p : {Param::beta, Param::J, Param::h, Param::c_a, Param::c_d, Param::c_diff,
                  Param::c_r})
    CHECK(parse_param(param_name(p)) == p);
  CHECK_FALSE(parse_param("bogus").has_value());

  for (ModelKind k :
       {ModelKind::ising_ad, ModelKind::ad_diffusion, ModelKind::zgb, ModelKind::evans_co})
    CHECK(parse_model_kind(model_kind_name(k)) == k);
  CHECK_FALSE(parse_model_kind("nope").has_value());

  Params base;
  const Params moved = perturb(base, {Param::J, 0.25});
  CHECK(moved.J == 1.25);
  CHECK(moved.beta == base.beta);
  CHECK(moved.h == base.h);
}
