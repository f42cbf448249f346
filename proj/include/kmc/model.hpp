#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kmc/lattice.hpp"

namespace kmc {

/// Named model parameters. Unused entries are ignored by a given model.
enum class Param { beta, J, h, c_a, c_d, c_diff, c_r };

struct Params {
  double beta = 1.0;
  double J = 1.0;
  double h = 1.0;
  double c_a = 1.0;
  double c_d = 1.0;
  double c_diff = 1.0;
  double c_r = 1.0;

  double get(Param p) const;
  void set(Param p, double v);
};

const char* param_name(Param p);
std::optional<Param> parse_param(std::string_view name);

/// A finite-difference direction: which parameter moves, and by how much.
struct Perturbation {
  Param param = Param::beta;
  double step = 0.0;
};

/// Returns theta with the perturbed entry shifted by `step`.
Params perturb(const Params& theta, const Perturbation& dir);

enum class ModelKind { ising_ad, ad_diffusion, zgb, evans_co };

const char* model_kind_name(ModelKind k);
std::optional<ModelKind> parse_model_kind(std::string_view name);

/// Mechanism tags. (type, slot) identifies an event among those generated at
/// one site, which is also the pairing key the site-paired couplings use.
enum class EventType : std::uint8_t {
  flip,        // adsorption/desorption at one binary site
  exchange,    // occupied/vacant swap with the axis neighbor at `slot`
  co_adsorb,
  o2_adsorb,   // dissociative pair adsorption toward `slot`
  co_diffuse,
  co_desorb,
  react,       // CO + O annihilation with the axis neighbor at `slot`
};

struct RatedEvent {
  Event ev;
  double rate = 0.0;
  EventType type = EventType::flip;
  std::uint8_t slot = 0;     // shape slot for directional mechanisms, else 0
  std::int8_t occ_delta = 0; // change in occupied-site count

  bool operator==(const RatedEvent&) const = default;
};

/// A concrete model: rate rules bound to a lattice and parameter vector.
///
/// Event enumeration is pure (no caching, no stored state), deterministic in
/// order (site ascending; within a site, mechanism order is fixed per model),
/// and omits null events. Rates are nonnegative for every reachable state;
/// parameter combinations that could break that are rejected up front.
class Model {
 public:
  Model(ModelKind kind, const Lattice& lattice, const Params& params);

  ModelKind kind() const { return kind_; }
  const Lattice& lattice() const { return lattice_; }
  const Params& params() const { return params_; }
  const NeighborhoodShape& shape() const { return *shape_; }
  const SpeciesSet& species() const { return species_; }

  Model with_params(const Params& p) const { return Model(kind_, lattice_, p); }

  bool occupied(Species s) const { return s != species_.vacant; }

  /// Appends all events generated at site x under sigma.
  void events_at(const Configuration& sigma, SiteIndex x, std::vector<RatedEvent>& out) const;

  std::vector<RatedEvent> enumerate_events(const Configuration& sigma) const;

  double total_rate(const Configuration& sigma) const;

  /// Adsorption/desorption rate at x (ising_ad and ad_diffusion only).
  double ising_rate(const Configuration& sigma, SiteIndex x) const;

  /// Exchange rate sigma -> sigma^{x,y}: c_diff when y is an axis neighbor of
  /// x and the move is occupied -> vacant, else 0 (ad_diffusion only).
  double diffusion_rate(const Configuration& sigma, SiteIndex x, SiteIndex y) const;

  /// Appends the sites whose event lists may change after the value at
  /// `changed` changed: the wrapped inverse stencil of the shape. May append
  /// duplicates; callers dedupe across several changed sites at once.
  void affected_sites(SiteIndex changed, std::vector<SiteIndex>& out) const;

 private:
  void ising_events_at(const Configuration&, SiteIndex, std::vector<RatedEvent>&) const;
  void zgb_events_at(const Configuration&, SiteIndex, std::vector<RatedEvent>&) const;
  void evans_events_at(const Configuration&, SiteIndex, std::vector<RatedEvent>&) const;

  ModelKind kind_;
  Lattice lattice_;
  Params params_;
  const NeighborhoodShape* shape_;
  SpeciesSet species_;
};

}  // namespace kmc
