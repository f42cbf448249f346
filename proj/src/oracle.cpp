#include "kmc/oracle.hpp"

#include <cmath>
#include <string>
#include <unsupported/Eigen/MatrixFunctions>
#include <vector>

#include "kmc/errors.hpp"

namespace kmc {

StateSpace::StateSpace(const Lattice& lattice, const SpeciesSet& species,
                       std::size_t max_states)
    : lattice_(lattice), species_(species) {
  const std::size_t radix = species.values.size();
  const int n = lattice.size();
  std::size_t count = 1;
  for (int i = 0; i < n; ++i) {
    if (count > max_states / radix + 1) count = max_states + 1;
    else count *= radix;
    if (count > max_states)
      throw ConfigError("state space exceeds the oracle budget of " +
                        std::to_string(max_states) + " states (" +
                        std::to_string(radix) + "^" + std::to_string(n) + ")");
  }
  states_.reserve(count);
  Configuration sigma(lattice, species.values[0]);
  std::vector<std::size_t> digit(static_cast<std::size_t>(n), 0);
  for (std::size_t idx = 0;; ++idx) {
    for (int x = 0; x < n; ++x)
      sigma[x] = species.values[digit[static_cast<std::size_t>(x)]];
    states_.push_back(sigma);
    int pos = 0;
    while (pos < n) {
      if (++digit[static_cast<std::size_t>(pos)] < radix) break;
      digit[static_cast<std::size_t>(pos)] = 0;
      ++pos;
    }
    if (pos == n) break;
  }
}

std::size_t StateSpace::index(const Configuration& sigma) const {
  const std::size_t radix = species_.values.size();
  std::size_t idx = 0, place = 1;
  for (SiteIndex x = 0; x < lattice_.size(); ++x) {
    std::size_t digit = radix;
    for (std::size_t d = 0; d < radix; ++d)
      if (species_.values[d] == sigma[x]) digit = d;
    check(digit < radix, "configuration value outside the species set");
    idx += digit * place;
    place *= radix;
  }
  return idx;
}

Eigen::SparseMatrix<double> build_generator(const Model& model, const StateSpace& space) {
  const auto dim = static_cast<Eigen::Index>(space.size());
  std::vector<Eigen::Triplet<double>> trips;
  for (std::size_t s = 0; s < space.size(); ++s) {
    const Configuration& sigma = space.state(s);
    double lambda = 0.0;
    for (const RatedEvent& e : model.enumerate_events(sigma)) {
      Configuration next = sigma;
      apply_update(next, model.shape(), e.ev);
      const std::size_t to = space.index(next);
      check(to != s, "event produced a null transition");
      check(e.rate >= 0.0, "negative rate in generator build");
      trips.emplace_back(static_cast<Eigen::Index>(to), static_cast<Eigen::Index>(s), e.rate);
      lambda += e.rate;
    }
    trips.emplace_back(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s), -lambda);
  }
  Eigen::SparseMatrix<double> Q(dim, dim);
  Q.setFromTriplets(trips.begin(), trips.end());  // duplicate entries accumulate
  return Q;
}

Eigen::VectorXd uniformized_apply(const Eigen::SparseMatrix<double>& G, Eigen::VectorXd v,
                                  double t, double tol) {
  check(t >= 0.0, "uniformized_apply needs t >= 0");
  if (t == 0.0) return v;
  double lambda = 0.0;
  for (Eigen::Index i = 0; i < G.rows(); ++i) lambda = std::max(lambda, -G.coeff(i, i));
  if (lambda <= 0.0) return v;  // zero generator

  // Keep Lambda*t per segment moderate so e^{-Lambda t} stays representable.
  const int segments = std::max(1, static_cast<int>(std::ceil(lambda * t / 500.0)));
  const double dt = t / segments;
  const double a = lambda * dt;
  const double seg_tol = tol / segments;

  Eigen::SparseMatrix<double> P = G;
  P /= lambda;
  for (Eigen::Index i = 0; i < P.rows(); ++i) P.coeffRef(i, i) += 1.0;

  for (int seg = 0; seg < segments; ++seg) {
    Eigen::VectorXd term = v;
    double weight = std::exp(-a);  // Poisson(n=0)
    double covered = weight;
    Eigen::VectorXd acc = weight * term;
    for (long n = 1; covered < 1.0 - seg_tol; ++n) {
      term = P * term;
      weight *= a / static_cast<double>(n);
      covered += weight;
      acc += weight * term;
      check(n < 100000000L, "uniformization failed to converge");
    }
    v = std::move(acc);
  }
  return v;
}

Eigen::MatrixXd expm_dense(const Eigen::MatrixXd& A) {
  check(A.rows() == A.cols(), "expm needs a square matrix");
  check(A.rows() <= 4096, "dense matrix exponential limited to 4096 states");
  return A.exp();
}

Eigen::VectorXd solve_expectation(const Eigen::SparseMatrix<double>& Q,
                                  const Eigen::VectorXd& f, double t) {
  Eigen::SparseMatrix<double> Qt = Q.transpose();
  return uniformized_apply(Qt, f, t);
}

Eigen::VectorXd exact_marginal(const Eigen::SparseMatrix<double>& Q, std::size_t initial,
                               double t) {
  Eigen::VectorXd p0 = Eigen::VectorXd::Zero(Q.rows());
  p0[static_cast<Eigen::Index>(initial)] = 1.0;
  return uniformized_apply(Q, p0, t);
}

Eigen::VectorXd observable_vector(const Observable& f, const StateSpace& space) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(space.size()));
  for (std::size_t s = 0; s < space.size(); ++s)
    v[static_cast<Eigen::Index>(s)] = f.eval(space.state(s));
  return v;
}

std::vector<double> exact_fd(const Model& a, const Model& b, const StateSpace& space,
                             const Observable& f, const Configuration& initial,
                             const std::vector<double>& times) {
  const Eigen::SparseMatrix<double> Qa = build_generator(a, space);
  const Eigen::SparseMatrix<double> Qb = build_generator(b, space);
  const Eigen::VectorXd fv = observable_vector(f, space);
  const auto s0 = static_cast<Eigen::Index>(space.index(initial));
  std::vector<double> out;
  out.reserve(times.size());
  for (double t : times) {
    const Eigen::VectorXd ua = solve_expectation(Qa, fv, t);
    const Eigen::VectorXd ub = solve_expectation(Qb, fv, t);
    out.push_back(ua[s0] - ub[s0]);
  }
  return out;
}

Eigen::VectorXd stationary(const Eigen::SparseMatrix<double>& Q) {
  // Replace one balance equation (it is redundant: columns sum to zero) with
  // the normalization sum(p) = 1.
  Eigen::MatrixXd A = Eigen::MatrixXd(Q);
  A.row(0).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(A.rows());
  b[0] = 1.0;
  return A.partialPivLu().solve(b);
}

}  // namespace kmc
