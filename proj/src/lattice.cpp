#include "kmc/lattice.hpp"

#include <algorithm>
#include <stdexcept>
#include <utility>

namespace kmc {

Lattice::Lattice(int dimension, int rows, int cols)
    : dimension_(dimension), rows_(rows), cols_(cols) {
  if (dimension != 1 && dimension != 2)
    throw std::invalid_argument("lattice dimension must be 1 or 2");
  if (rows < 1 || cols < 1) throw std::invalid_argument("lattice sides must be positive");
  if (dimension == 1 && rows != 1)
    throw std::invalid_argument("1D lattice must have rows == 1");
}

NeighborhoodShape::NeighborhoodShape(std::string name, std::vector<Offset> offsets)
    : name_(std::move(name)), offsets_(std::move(offsets)) {
  if (offsets_.empty() || !(offsets_[0] == Offset{0, 0}))
    throw std::invalid_argument("neighborhood shape must start with the (0,0) slot");
  int rlo = 0, rhi = 0, clo = 0, chi = 0;
  for (const Offset& o : offsets_) {
    rlo = std::min(rlo, o.dr);
    rhi = std::max(rhi, o.dr);
    clo = std::min(clo, o.dc);
    chi = std::max(chi, o.dc);
  }
  diameter_ = std::max(rhi - rlo, chi - clo);
}

const NeighborhoodShape& NeighborhoodShape::line3() {
  static const NeighborhoodShape shape("line3", {{0, 0}, {0, -1}, {0, 1}});
  return shape;
}

const NeighborhoodShape& NeighborhoodShape::cross5() {
  static const NeighborhoodShape shape("cross5",
                                       {{0, 0}, {-1, 0}, {0, 1}, {1, 0}, {0, -1}});
  return shape;
}

const NeighborhoodShape& NeighborhoodShape::star17() {
  // Slots (0-based): 0 center; ring clockwise from up: 1 (-1,0), 2 (-1,1),
  // 3 (0,1), 4 (1,1), 5 (1,0), 6 (1,-1), 7 (0,-1), 8 (-1,-1); outward axis
  // neighbors of the diagonals: 9 (-2,-1), 10 (-2,1), 11 (-1,2), 12 (1,2),
  // 13 (2,1), 14 (2,-1), 15 (1,-2), 16 (-1,-2).
  static const NeighborhoodShape shape(
      "star17", {{0, 0},   {-1, 0}, {-1, 1}, {0, 1},  {1, 1},  {1, 0},
                 {1, -1},  {0, -1}, {-1, -1}, {-2, -1}, {-2, 1}, {-1, 2},
                 {1, 2},   {2, 1},  {2, -1}, {1, -2}, {-1, -2}});
  return shape;
}

const std::array<int, 4>& NeighborhoodShape::star17_diagonal_adjacent(int diag_slot) {
  // 0-based slots; each diagonal's four axis-adjacent sites all lie inside
  // the shape. Invariant checked by tests against the offset geometry.
  static const std::array<int, 4> d2 = {1, 3, 10, 11};   // up-right diagonal
  static const std::array<int, 4> d4 = {3, 5, 12, 13};   // down-right
  static const std::array<int, 4> d6 = {5, 7, 14, 15};   // down-left
  static const std::array<int, 4> d8 = {1, 7, 9, 16};    // up-left
  switch (diag_slot) {
    case 2: return d2;
    case 4: return d4;
    case 6: return d6;
    case 8: return d8;
    default: throw std::invalid_argument("not a diagonal slot of star17");
  }
}

NeighborSites neighborhood_sites(const Lattice& lattice, const NeighborhoodShape& shape,
                                 SiteIndex x) {
  NeighborSites out;
  out.n = shape.size();
  const int r = lattice.row(x), c = lattice.col(x);
  for (int i = 0; i < out.n; ++i) {
    const Offset& o = shape.offset(i);
    out.s[static_cast<std::size_t>(i)] = lattice.site(r + o.dr, c + o.dc);
  }
  return out;
}

LocalConfiguration read_local(const Configuration& sigma, const NeighborhoodShape& shape,
                              SiteIndex x) {
  NeighborSites ns = neighborhood_sites(sigma.lattice(), shape, x);
  LocalConfiguration w(ns.n);
  for (int i = 0; i < ns.n; ++i) w[i] = sigma[ns.s[static_cast<std::size_t>(i)]];
  return w;
}

UpdateDiff apply_update(Configuration& sigma, const NeighborhoodShape& shape, const Event& e) {
  NeighborSites ns = neighborhood_sites(sigma.lattice(), shape, e.site);
  UpdateDiff diff;
  for (int i = 0; i < ns.n; ++i) {
    const SiteIndex s = ns.s[static_cast<std::size_t>(i)];
    const Species nv = e.omega[i];
    if (sigma[s] != nv) {
      // Record the value before the first change to this site.
      bool seen = false;
      for (int j = 0; j < diff.n; ++j)
        if (diff.site[static_cast<std::size_t>(j)] == s) seen = true;
      if (!seen) {
        diff.site[static_cast<std::size_t>(diff.n)] = s;
        diff.old_value[static_cast<std::size_t>(diff.n)] = sigma[s];
        ++diff.n;
      }
      sigma[s] = nv;
    }
  }
  // A later duplicate slot may restore an earlier change; drop no-op entries.
  int kept = 0;
  for (int j = 0; j < diff.n; ++j) {
    const SiteIndex s = diff.site[static_cast<std::size_t>(j)];
    if (sigma[s] != diff.old_value[static_cast<std::size_t>(j)]) {
      diff.site[static_cast<std::size_t>(kept)] = s;
      diff.old_value[static_cast<std::size_t>(kept)] = diff.old_value[static_cast<std::size_t>(j)];
      ++kept;
    }
  }
  diff.n = kept;
  return diff;
}

void flip(Configuration& sigma, SiteIndex x) { sigma[x] = sigma[x] ? 0 : 1; }

}  // namespace kmc
