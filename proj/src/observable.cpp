#include "kmc/observable.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "kmc/errors.hpp"

namespace kmc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt_bound(double v) {
  if (v == kInf) return "inf";
  if (v == -kInf) return "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

double parse_bound(const std::string& tok) {
  std::string t = tok;
  if (t == "inf" || t == "+inf") return kInf;
  if (t == "-inf") return -kInf;
  try {
    std::size_t used = 0;
    double v = std::stod(t, &used);
    if (used != t.size()) throw ConfigError("partition: bad number '" + tok + "'");
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("partition: bad number '" + tok + "'");
  }
}

}  // namespace

std::string Partition::Piece::label() const {
  if (is_point) return "{" + fmt_bound(point) + "}";
  std::string s;
  s += lo_closed ? '[' : '(';
  s += fmt_bound(lo) + "," + fmt_bound(hi);
  s += hi_closed ? ']' : ')';
  return s;
}

Partition::Partition(std::vector<Piece> pieces) : pieces_(std::move(pieces)) {
  if (pieces_.empty()) throw ConfigError("partition: needs at least one piece");
  auto start = [](const Piece& p) { return p.is_point ? p.point : p.lo; };
  std::stable_sort(pieces_.begin(), pieces_.end(),
                   [&](const Piece& a, const Piece& b) { return start(a) < start(b); });
  for (const Piece& p : pieces_) {
    if (p.is_point) {
      if (!std::isfinite(p.point)) throw ConfigError("partition: point must be finite");
    } else {
      if (!(p.lo < p.hi)) throw ConfigError("partition: interval needs lo < hi");
      if (p.lo == -kInf && p.lo_closed) throw ConfigError("partition: [-inf is not valid");
      if (p.hi == kInf && p.hi_closed) throw ConfigError("partition: inf] is not valid");
    }
  }
  // The pieces must tile R: first starts at -inf, each next piece starts where
  // the previous ended with complementary closedness, last ends at +inf.
  const Piece& first = pieces_.front();
  if (first.is_point || first.lo != -kInf)
    throw ConfigError("partition: must start with an interval from -inf");
  for (std::size_t i = 0; i + 1 < pieces_.size(); ++i) {
    const Piece& a = pieces_[i];
    const Piece& b = pieces_[i + 1];
    const double a_end = a.is_point ? a.point : a.hi;
    const bool a_end_closed = a.is_point ? true : a.hi_closed;
    const double b_start = b.is_point ? b.point : b.lo;
    const bool b_start_closed = b.is_point ? true : b.lo_closed;
    if (a_end != b_start)
      throw ConfigError("partition: gap or overlap between " + a.label() + " and " + b.label());
    if (a_end_closed == b_start_closed)
      throw ConfigError("partition: boundary " + fmt_bound(a_end) +
                        " is covered twice or not at all");
  }
  const Piece& last = pieces_.back();
  if (last.is_point || last.hi != kInf)
    throw ConfigError("partition: must end with an interval to +inf");
}

Partition Partition::sign() {
  Piece neg{false, 0.0, -kInf, 0.0, false, false};
  Piece zero{true, 0.0, 0.0, 0.0, false, false};
  Piece pos{false, 0.0, 0.0, kInf, false, false};
  return Partition({neg, zero, pos});
}

Partition Partition::parse(const std::string& text) {
  std::vector<Piece> pieces;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) {
    if (tok == "sign") {
      for (int k = 0; k < 3; ++k) pieces.push_back(Partition::sign().piece(k));
      continue;
    }
    Piece p;
    if (tok.size() >= 3 && tok.front() == '{' && tok.back() == '}') {
      p.is_point = true;
      p.point = parse_bound(tok.substr(1, tok.size() - 2));
    } else if (tok.size() >= 5 && (tok.front() == '(' || tok.front() == '[') &&
               (tok.back() == ')' || tok.back() == ']')) {
      p.lo_closed = tok.front() == '[';
      p.hi_closed = tok.back() == ']';
      const std::string body = tok.substr(1, tok.size() - 2);
      const std::size_t comma = body.find(',');
      if (comma == std::string::npos)
        throw ConfigError("partition: piece '" + tok + "' needs 'lo,hi'");
      p.lo = parse_bound(body.substr(0, comma));
      p.hi = parse_bound(body.substr(comma + 1));
    } else {
      throw ConfigError("partition: cannot parse piece '" + tok + "'");
    }
    pieces.push_back(p);
  }
  return Partition(std::move(pieces));
}

int Partition::classify(double v) const {
  check(!std::isnan(v), "cannot classify NaN observable increment");
  for (std::size_t k = 0; k < pieces_.size(); ++k) {
    const Piece& p = pieces_[k];
    if (p.is_point) {
      if (v == p.point) return static_cast<int>(k);
    } else if ((v > p.lo || (p.lo_closed && v == p.lo) || (p.lo == -kInf && v == -kInf)) &&
               (v < p.hi || (p.hi_closed && v == p.hi) || (p.hi == kInf && v == kInf))) {
      // Unbounded ends absorb the matching infinity.
      return static_cast<int>(k);
    }
  }
  throw InvariantError("partition does not cover value");  // unreachable after validation
}

std::string Partition::label() const {
  std::string s;
  for (int k = 0; k < size(); ++k) {
    if (k) s += ' ';
    s += pieces_[static_cast<std::size_t>(k)].label();
  }
  return s;
}

Observable Observable::coverage(Species vacant) {
  return Observable(ObservableKind::coverage, vacant);
}

Observable Observable::species_coverage(Species target, Species vacant) {
  Observable o(ObservableKind::species_coverage, vacant);
  o.target_ = target;
  return o;
}

Observable Observable::hamiltonian(double J, double h, Species vacant) {
  Observable o(ObservableKind::hamiltonian, vacant);
  o.J_ = J;
  o.h_ = h;
  return o;
}

Observable Observable::pair_correlation(int r, Species vacant) {
  Observable o(ObservableKind::pair_correlation, vacant);
  o.r_ = r;
  return o;
}

std::string Observable::label() const {
  switch (kind_) {
    case ObservableKind::coverage: return "coverage";
    case ObservableKind::species_coverage:
      return "species_coverage(" + std::to_string(static_cast<int>(target_)) + ")";
    case ObservableKind::hamiltonian: return "hamiltonian";
    case ObservableKind::pair_correlation:
      return "pair_correlation(" + std::to_string(r_) + ")";
  }
  return "?";
}

long long Observable::eval_count(const Configuration& sigma) const {
  const Lattice& lat = sigma.lattice();
  long long n = 0;
  switch (kind_) {
    case ObservableKind::coverage:
      for (SiteIndex x = 0; x < lat.size(); ++x) n += occ(sigma[x]);
      return n;
    case ObservableKind::species_coverage:
      for (SiteIndex x = 0; x < lat.size(); ++x) n += sigma[x] == target_;
      return n;
    case ObservableKind::pair_correlation:
      for (SiteIndex x = 0; x < lat.size(); ++x)
        n += occ(sigma[x]) && occ(sigma[lat.translate(x, 0, r_)]);
      return n;
    case ObservableKind::hamiltonian: break;
  }
  throw InvariantError("eval_count on a non count-based observable");
}

double Observable::eval(const Configuration& sigma) const {
  const Lattice& lat = sigma.lattice();
  if (count_based())
    return static_cast<double>(eval_count(sigma)) / static_cast<double>(lat.size());
  long long pairs = 0, occs = 0;
  for (SiteIndex x = 0; x < lat.size(); ++x) {
    const bool nx = occ(sigma[x]);
    occs += nx;
    if (!nx) continue;
    pairs += occ(sigma[lat.translate(x, 0, 1)]);
    if (lat.dimension() == 2) pairs += occ(sigma[lat.translate(x, 1, 0)]);
  }
  return -J_ * static_cast<double>(pairs) - h_ * static_cast<double>(occs);
}

namespace {

/// Sites an event would change, with old and new values. Later duplicate
/// slots overwrite earlier ones, mirroring apply_update.
struct Mods {
  int n = 0;
  std::array<SiteIndex, LocalConfiguration::kMaxSlots> site{};
  std::array<Species, LocalConfiguration::kMaxSlots> before{}, after{};

  Species value_after(const Configuration& sigma, SiteIndex s) const {
    for (int i = 0; i < n; ++i)
      if (site[static_cast<std::size_t>(i)] == s) return after[static_cast<std::size_t>(i)];
    return sigma[s];
  }
};

Mods collect_mods(const Configuration& sigma, const NeighborhoodShape& shape,
                  const RatedEvent& e) {
  NeighborSites ns = neighborhood_sites(sigma.lattice(), shape, e.ev.site);
  Mods m;
  for (int i = 0; i < ns.n; ++i) {
    const SiteIndex s = ns.s[static_cast<std::size_t>(i)];
    const Species nv = e.ev.omega[i];
    int at = -1;
    for (int j = 0; j < m.n; ++j)
      if (m.site[static_cast<std::size_t>(j)] == s) at = j;
    if (at >= 0) {
      m.after[static_cast<std::size_t>(at)] = nv;
    } else {
      m.site[static_cast<std::size_t>(m.n)] = s;
      m.before[static_cast<std::size_t>(m.n)] = sigma[s];
      m.after[static_cast<std::size_t>(m.n)] = nv;
      ++m.n;
    }
  }
  int kept = 0;
  for (int j = 0; j < m.n; ++j) {
    if (m.before[static_cast<std::size_t>(j)] != m.after[static_cast<std::size_t>(j)]) {
      m.site[static_cast<std::size_t>(kept)] = m.site[static_cast<std::size_t>(j)];
      m.before[static_cast<std::size_t>(kept)] = m.before[static_cast<std::size_t>(j)];
      m.after[static_cast<std::size_t>(kept)] = m.after[static_cast<std::size_t>(j)];
      ++kept;
    }
  }
  m.n = kept;
  return m;
}

/// Append b to bases if not present.
void add_base(std::array<SiteIndex, 64>& bases, int& nb, SiteIndex b) {
  for (int i = 0; i < nb; ++i)
    if (bases[static_cast<std::size_t>(i)] == b) return;
  bases[static_cast<std::size_t>(nb++)] = b;
}

}  // namespace

long long Observable::delta_count(const Configuration& sigma, const NeighborhoodShape& shape,
                                  const RatedEvent& e) const {
  const Lattice& lat = sigma.lattice();
  Mods m = collect_mods(sigma, shape, e);
  long long d = 0;
  switch (kind_) {
    case ObservableKind::coverage:
      for (int i = 0; i < m.n; ++i)
        d += static_cast<long long>(occ(m.after[static_cast<std::size_t>(i)])) -
             occ(m.before[static_cast<std::size_t>(i)]);
      return d;
    case ObservableKind::species_coverage:
      for (int i = 0; i < m.n; ++i)
        d += static_cast<long long>(m.after[static_cast<std::size_t>(i)] == target_) -
             (m.before[static_cast<std::size_t>(i)] == target_);
      return d;
    case ObservableKind::pair_correlation: {
      std::array<SiteIndex, 64> bases{};
      int nb = 0;
      for (int i = 0; i < m.n; ++i) {
        const SiteIndex s = m.site[static_cast<std::size_t>(i)];
        add_base(bases, nb, s);
        add_base(bases, nb, lat.translate(s, 0, -r_));
      }
      for (int i = 0; i < nb; ++i) {
        const SiteIndex b = bases[static_cast<std::size_t>(i)];
        const SiteIndex p = lat.translate(b, 0, r_);
        d += static_cast<long long>(occ(m.value_after(sigma, b)) &&
                                    occ(m.value_after(sigma, p))) -
             (occ(sigma[b]) && occ(sigma[p]));
      }
      return d;
    }
    case ObservableKind::hamiltonian: break;
  }
  throw InvariantError("delta_count on a non count-based observable");
}

double Observable::delta(const Configuration& sigma, const NeighborhoodShape& shape,
                         const RatedEvent& e) const {
  const Lattice& lat = sigma.lattice();
  if (count_based())
    return static_cast<double>(delta_count(sigma, shape, e)) /
           static_cast<double>(lat.size());

  Mods m = collect_mods(sigma, shape, e);
  std::array<SiteIndex, 64> bases{};
  int nb = 0;
  for (int i = 0; i < m.n; ++i) {
    const SiteIndex s = m.site[static_cast<std::size_t>(i)];
    add_base(bases, nb, s);
    add_base(bases, nb, lat.translate(s, 0, -1));
    if (lat.dimension() == 2) add_base(bases, nb, lat.translate(s, -1, 0));
  }
  long long dpairs = 0, doccs = 0;
  for (int i = 0; i < m.n; ++i)
    doccs += static_cast<long long>(occ(m.after[static_cast<std::size_t>(i)])) -
             occ(m.before[static_cast<std::size_t>(i)]);
  for (int i = 0; i < nb; ++i) {
    const SiteIndex b = bases[static_cast<std::size_t>(i)];
    const bool b_after = occ(m.value_after(sigma, b));
    const bool b_before = occ(sigma[b]);
    const SiteIndex right = lat.translate(b, 0, 1);
    dpairs += static_cast<long long>(b_after && occ(m.value_after(sigma, right))) -
              (b_before && occ(sigma[right]));
    if (lat.dimension() == 2) {
      const SiteIndex down = lat.translate(b, 1, 0);
      dpairs += static_cast<long long>(b_after && occ(m.value_after(sigma, down))) -
                (b_before && occ(sigma[down]));
    }
  }
  return -J_ * static_cast<double>(dpairs) - h_ * static_cast<double>(doccs);
}

int Observable::classify(const Partition& partition, const Configuration& sigma,
                         const NeighborhoodShape& shape, const RatedEvent& e) const {
  return partition.classify(delta(sigma, shape, e));
}

}  // namespace kmc
