#include "kmc/exactsum.hpp"

#include <cmath>
#include <utility>

namespace kmc {

namespace {

// s = fl(a + b), err exact; no magnitude precondition.
inline void two_sum(double a, double b, double& s, double& err) {
  s = a + b;
  const double bv = s - a;
  err = (a - (s - bv)) + (b - bv);
}

// Requires |a| >= |b| (or a == 0).
inline void fast_two_sum(double a, double b, double& s, double& err) {
  s = a + b;
  err = b - (s - a);
}

}  // namespace

void ExactSum::add(double x) {
  if (x == 0.0) return;
  std::vector<double> out;
  out.reserve(c_.size() + 1);
  double q = x;
  for (double comp : c_) {
    double s, err;
    two_sum(q, comp, s, err);
    if (err != 0.0) out.push_back(err);
    q = s;
  }
  if (q != 0.0) out.push_back(q);
  c_ = std::move(out);
}

void ExactSum::add(const ExactSum& o) {
  for (double comp : o.c_) add(comp);
}

int ExactSum::compare(const ExactSum& o) const {
  ExactSum diff = *this;
  for (double comp : o.c_) diff.add(-comp);
  if (diff.c_.empty()) return 0;
  return diff.c_.back() > 0.0 ? 1 : -1;
}

double ExactSum::round() const {
  const std::size_t m = c_.size();
  if (m == 0) return 0.0;
  if (m == 1) return c_[0];
  // Two-pass compression; afterwards the most significant component carries
  // the whole value to within half an ulp, i.e. it is the correctly rounded
  // double of the exact sum.
  std::vector<double> g(m);
  double q = c_[m - 1];
  std::size_t bottom = m - 1;
  for (std::size_t i = m - 1; i-- > 0;) {
    double s, err;
    fast_two_sum(q, c_[i], s, err);
    if (err != 0.0) {
      g[bottom--] = s;
      q = err;
    } else {
      q = s;
    }
  }
  g[bottom] = q;
  double top = g[bottom];
  for (std::size_t i = bottom + 1; i < m; ++i) {
    double s, err;
    fast_two_sum(g[i], top, s, err);
    top = s;
  }
  return top;
}

}  // namespace kmc
