#include "kmc/engine.hpp"

#include <algorithm>

#include "kmc/errors.hpp"

namespace kmc {

Grid Grid::uniform(double t0, double t1, int count) {
  if (count < 1) throw ConfigError("grid: count must be >= 1");
  if (t0 < 0.0 || (count > 1 && !(t0 < t1))) throw ConfigError("grid: need 0 <= start < stop");
  Grid g;
  g.times.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double s = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
    g.times.push_back(t0 + s * (t1 - t0));
  }
  return g;
}

Grid Grid::list(std::vector<double> times) {
  if (times.empty()) throw ConfigError("grid: needs at least one time");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < 0.0) throw ConfigError("grid: times must be nonnegative");
    if (i > 0 && !(times[i - 1] < times[i]))
      throw ConfigError("grid: times must be strictly increasing");
  }
  Grid g;
  g.times = std::move(times);
  return g;
}

PathResult simulate_path(const Model& model, Configuration sigma, const Observable& obs,
                         const Grid& grid, RngStream& rng, std::uint64_t rebuild_interval) {
  const std::size_t n = grid.size();
  PathResult out;
  out.f.resize(n);
  EventCatalog cat(model, sigma, rebuild_interval);
  ObservableTracker f(obs, sigma);
  double t = 0.0;
  std::size_t g = 0;
  while (g < n) {
    const double lambda = cat.total_rate();
    if (lambda <= 0.0) {
      while (g < n) out.f[g++] = f.value();
      break;
    }
    const double tnext = t + rng.exp_time(lambda);
    while (g < n && grid.times[g] <= tnext) out.f[g++] = f.value();
    if (g == n) break;
    const RatedEvent e = cat.sample(rng.uniform01() * lambda);
    f.on_event(sigma, model.shape(), e);
    cat.apply(sigma, e);
    t = tnext;
  }
  out.events = cat.events_applied();
  out.final = std::move(sigma);
  return out;
}

PairResult simulate_pair_uncoupled(const Model& a, const Model& b, Configuration sigma,
                                   Configuration eta, const Observable& obs, const Grid& grid,
                                   RngStream& rng_a, RngStream& rng_b) {
  PathResult ra = simulate_path(a, std::move(sigma), obs, grid, rng_a);
  PathResult rb = simulate_path(b, std::move(eta), obs, grid, rng_b);
  PairResult out;
  out.f_sigma = std::move(ra.f);
  out.f_eta = std::move(rb.f);
  out.sigma_final = std::move(ra.final);
  out.eta_final = std::move(rb.final);
  out.events = ra.events + rb.events;
  return out;
}

namespace {

/// One process of a CRN pair.
struct CrnLeg {
  CrnLeg(const Model& m, Configuration s, const Observable& obs, const Grid& grid,
         std::vector<double>& out)
      : model(m), sigma(std::move(s)), cat(m, sigma), f(obs, sigma), grid(grid), out(out) {}

  const Model& model;
  Configuration sigma;
  EventCatalog cat;
  ObservableTracker f;
  const Grid& grid;
  std::vector<double>& out;
  double t = 0.0;
  std::size_t g = 0;

  bool finished() const { return g >= grid.size(); }

  /// Advances by one jump, consuming draws from `rng` as documented in the
  /// header. Returns false once the grid is exhausted.
  bool advance(RngStream& rng) {
    if (finished()) return false;
    const double lambda = cat.total_rate();
    if (lambda <= 0.0) {
      while (g < grid.size()) out[g++] = f.value();
      return false;
    }
    const double tnext = t + rng.exp_time(lambda);
    while (g < grid.size() && grid.times[g] <= tnext) out[g++] = f.value();
    if (finished()) return false;
    const RatedEvent e = cat.sample(rng.uniform01() * lambda);
    f.on_event(sigma, model.shape(), e);
    cat.apply(sigma, e);
    t = tnext;
    return true;
  }
};

}  // namespace

PairResult simulate_pair_crn(const Model& a, const Model& b, Configuration sigma,
                             Configuration eta, const Observable& obs, const Grid& grid,
                             RngStream& shared) {
  PairResult out;
  out.f_sigma.resize(grid.size());
  out.f_eta.resize(grid.size());
  CrnLeg la(a, std::move(sigma), obs, grid, out.f_sigma);
  CrnLeg lb(b, std::move(eta), obs, grid, out.f_eta);
  while (!la.finished() || !lb.finished()) {
    la.advance(shared);
    lb.advance(shared);
  }
  out.events = la.cat.events_applied() + lb.cat.events_applied();
  out.sigma_final = std::move(la.sigma);
  out.eta_final = std::move(lb.sigma);
  return out;
}

}  // namespace kmc
