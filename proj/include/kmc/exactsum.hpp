#pragma once

#include <vector>

namespace kmc {

/// Exact running sum of doubles, kept as a nonoverlapping expansion of
/// components in increasing magnitude (error-free transformations). Adds and
/// comparisons are exact; round() returns the correctly rounded double of the
/// represented value, so round() is a monotone function of the exact sum.
/// Used where inequalities between differently-grouped sums must hold with
/// zero tolerance instead of merely to rounding accuracy.
class ExactSum {
 public:
  void add(double x);
  void add(const ExactSum& o);
  /// Sign of (*this - o): -1, 0, +1. Exact.
  int compare(const ExactSum& o) const;
  double round() const;
  bool zero() const { return c_.empty(); }

 private:
  std::vector<double> c_;
};

}  // namespace kmc
