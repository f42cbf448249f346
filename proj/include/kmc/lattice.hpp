#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace kmc {

/// Per-site state. Models use small alphabets ({0,1} or {-1,0,1}).
using Species = std::int8_t;
using SiteIndex = std::int32_t;

/// Finite per-site alphabet with a designated vacant value.
struct SpeciesSet {
  std::vector<Species> values;
  Species vacant = 0;

  bool contains(Species s) const {
    for (Species v : values)
      if (v == s) return true;
    return false;
  }
};

/// Periodic 1D or 2D lattice. Sites are indexed row-major: site = r * cols + c.
/// A 1D lattice of length n is stored as rows == 1, cols == n.
class Lattice {
 public:
  Lattice() = default;
  Lattice(int dimension, int rows, int cols);

  static Lattice line(int n) { return Lattice(1, 1, n); }
  static Lattice grid(int rows, int cols) { return Lattice(2, rows, cols); }

  int dimension() const { return dimension_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  SiteIndex size() const { return static_cast<SiteIndex>(rows_) * cols_; }

  int row(SiteIndex s) const { return static_cast<int>(s) / cols_; }
  int col(SiteIndex s) const { return static_cast<int>(s) % cols_; }

  /// Site at (r, c) after periodic wrapping; r and c may be any integers.
  SiteIndex site(int r, int c) const {
    int rw = ((r % rows_) + rows_) % rows_;
    int cw = ((c % cols_) + cols_) % cols_;
    return static_cast<SiteIndex>(rw) * cols_ + cw;
  }

  /// Periodic translate of a site by (dr, dc).
  SiteIndex translate(SiteIndex s, int dr, int dc) const {
    return site(row(s) + dr, col(s) + dc);
  }

  bool operator==(const Lattice&) const = default;

 private:
  int dimension_ = 1;
  int rows_ = 1;
  int cols_ = 1;
};

/// Relative lattice displacement (row delta, column delta).
struct Offset {
  int dr = 0;
  int dc = 0;
  bool operator==(const Offset&) const = default;
};

/// Ordered list of offsets defining a local neighborhood. Slot 0 is always the
/// center (0,0); the slot order is part of the contract because events address
/// neighbors by slot.
class NeighborhoodShape {
 public:
  NeighborhoodShape(std::string name, std::vector<Offset> offsets);

  const std::string& name() const { return name_; }
  int size() const { return static_cast<int>(offsets_.size()); }
  const Offset& offset(int slot) const { return offsets_[slot]; }
  const std::vector<Offset>& offsets() const { return offsets_; }

  /// Largest span (max - min offset) over either axis. Wrapped neighborhood
  /// sites are pairwise distinct whenever every side length exceeds this.
  int diameter() const { return diameter_; }

  /// 1D: slots (self, left, right).
  static const NeighborhoodShape& line3();
  /// 2D: slots (self, up, right, down, left).
  static const NeighborhoodShape& cross5();
  /// 2D 17-site shape: slot 1 the center, slots 2-9 the surrounding ring
  /// clockwise from up (axis slots 2,4,6,8; diagonal slots 3,5,7,9), slots
  /// 10-17 the two outward axis neighbors of each diagonal. 1-based in this
  /// comment; code uses 0-based slots.
  static const NeighborhoodShape& star17();

  /// Axis-neighbor slots of the diagonal at `diag_slot` (star17 only):
  /// the four slots whose sites are axis-adjacent to that diagonal site.
  static const std::array<int, 4>& star17_diagonal_adjacent(int diag_slot);

 private:
  std::string name_;
  std::vector<Offset> offsets_;
  int diameter_ = 0;
};

/// Values over a shape's slots. Fixed capacity sized for the largest shape.
class LocalConfiguration {
 public:
  static constexpr int kMaxSlots = 17;

  LocalConfiguration() = default;
  explicit LocalConfiguration(int n) : size_(static_cast<std::uint8_t>(n)) {}

  int size() const { return size_; }
  Species operator[](int slot) const { return v_[slot]; }
  Species& operator[](int slot) { return v_[slot]; }

  bool operator==(const LocalConfiguration& o) const {
    if (size_ != o.size_) return false;
    for (int i = 0; i < size_; ++i)
      if (v_[i] != o.v_[i]) return false;
    return true;
  }

 private:
  std::uint8_t size_ = 0;
  std::array<Species, kMaxSlots> v_{};
};

/// Full lattice state.
class Configuration {
 public:
  Configuration() = default;
  Configuration(const Lattice& lattice, Species fill)
      : lattice_(lattice), values_(static_cast<std::size_t>(lattice.size()), fill) {}

  const Lattice& lattice() const { return lattice_; }
  SiteIndex size() const { return lattice_.size(); }

  Species operator[](SiteIndex s) const { return values_[static_cast<std::size_t>(s)]; }
  Species& operator[](SiteIndex s) { return values_[static_cast<std::size_t>(s)]; }

  bool operator==(const Configuration&) const = default;

 private:
  Lattice lattice_;
  std::vector<Species> values_;
};

/// An elementary transition: write `omega` over the neighborhood of `site`.
struct Event {
  SiteIndex site = 0;
  LocalConfiguration omega;

  bool operator==(const Event&) const = default;
};

/// Sites of the wrapped neighborhood of x, in slot order.
struct NeighborSites {
  int n = 0;
  std::array<SiteIndex, LocalConfiguration::kMaxSlots> s{};
};

NeighborSites neighborhood_sites(const Lattice& lattice, const NeighborhoodShape& shape,
                                 SiteIndex x);

/// Current values over the neighborhood of x, in slot order.
LocalConfiguration read_local(const Configuration& sigma, const NeighborhoodShape& shape,
                              SiteIndex x);

/// Sites whose value an update changed, with their old values.
struct UpdateDiff {
  int n = 0;
  std::array<SiteIndex, LocalConfiguration::kMaxSlots> site{};
  std::array<Species, LocalConfiguration::kMaxSlots> old_value{};
};

/// Writes e.omega over the neighborhood of e.site in slot order and reports
/// which sites changed. With duplicate wrapped slots the later slot wins.
UpdateDiff apply_update(Configuration& sigma, const NeighborhoodShape& shape, const Event& e);

/// Binary spin flip at x (0 <-> 1), no neighborhood bookkeeping.
void flip(Configuration& sigma, SiteIndex x);

}  // namespace kmc
