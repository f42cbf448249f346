#pragma once

#include <string>
#include <vector>

#include "kmc/lattice.hpp"
#include "kmc/model.hpp"

namespace kmc {

/// A partition of the real line into intervals and singleton points, used to
/// classify per-event observable increments. Pieces must tile R exactly:
/// sorted, no overlaps, no gaps.
class Partition {
 public:
  struct Piece {
    bool is_point = false;
    double point = 0.0;              // when is_point
    double lo = 0.0, hi = 0.0;       // when interval; +-inf allowed
    bool lo_closed = false, hi_closed = false;
    std::string label() const;
  };

  explicit Partition(std::vector<Piece> pieces);  // validates; throws ConfigError

  /// (-inf,0), {0}, (0,inf).
  static Partition sign();

  /// Grammar: whitespace-separated pieces, each "{v}" or "(lo,hi)" with
  /// optional square brackets for closed ends; "inf"/"-inf" allowed at the
  /// outer ends. Example: "(-inf,0) {0} (0,0.5] (0.5,inf)".
  static Partition parse(const std::string& text);

  int size() const { return static_cast<int>(pieces_.size()); }
  const Piece& piece(int k) const { return pieces_[static_cast<std::size_t>(k)]; }

  /// Class index of v (total by construction).
  int classify(double v) const;

  std::string label() const;

 private:
  std::vector<Piece> pieces_;
};

enum class ObservableKind { coverage, species_coverage, hamiltonian, pair_correlation };

/// A lattice functional together with an exact incremental evaluation rule.
///
/// Count-based kinds (coverage, species_coverage, pair_correlation) have
/// values m/N with integer m; they are tracked through integer numerators so
/// repeated increments never drift and class membership (notably "exactly
/// zero") is exact. The hamiltonian is evaluated in floating point.
class Observable {
 public:
  static Observable coverage(Species vacant);
  static Observable species_coverage(Species target, Species vacant);
  /// Lattice-gas energy over occupancy indicators:
  /// -J * sum_bonds n(x) n(y) - h * sum_x n(x), axis bonds (right and down).
  static Observable hamiltonian(double J, double h, Species vacant);
  /// (1/N) sum_x n(x) n(x + r columns), periodic.
  static Observable pair_correlation(int r, Species vacant);

  ObservableKind kind() const { return kind_; }
  std::string label() const;
  bool count_based() const { return kind_ != ObservableKind::hamiltonian; }

  double eval(const Configuration& sigma) const;
  /// Integer numerator (value * N); count-based kinds only.
  long long eval_count(const Configuration& sigma) const;

  /// f after applying e, minus f now; sigma is not mutated.
  double delta(const Configuration& sigma, const NeighborhoodShape& shape,
               const RatedEvent& e) const;
  long long delta_count(const Configuration& sigma, const NeighborhoodShape& shape,
                        const RatedEvent& e) const;

  int classify(const Partition& partition, const Configuration& sigma,
               const NeighborhoodShape& shape, const RatedEvent& e) const;

 private:
  Observable(ObservableKind k, Species vacant) : kind_(k), vacant_(vacant) {}

  bool occ(Species s) const { return s != vacant_; }

  ObservableKind kind_;
  Species vacant_ = 0;
  Species target_ = 0;  // species_coverage
  double J_ = 0.0, h_ = 0.0;  // hamiltonian
  int r_ = 1;  // pair_correlation
};

}  // namespace kmc
