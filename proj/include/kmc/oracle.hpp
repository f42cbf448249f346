#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <cstddef>
#include <vector>

#include "kmc/model.hpp"
#include "kmc/observable.hpp"

namespace kmc {

/// Exhaustive enumeration of the configurations of a small lattice, in
/// mixed-radix order: state index = sum_x digit(sigma[x]) * |alphabet|^x.
/// Construction refuses state spaces above the budget so callers cannot
/// accidentally ask for an intractable exact solve.
class StateSpace {
 public:
  static constexpr std::size_t kDefaultMaxStates = 4096;

  StateSpace(const Lattice& lattice, const SpeciesSet& species,
             std::size_t max_states = kDefaultMaxStates);

  std::size_t size() const { return states_.size(); }
  const Configuration& state(std::size_t idx) const { return states_[idx]; }
  std::size_t index(const Configuration& sigma) const;
  const Lattice& lattice() const { return lattice_; }

 private:
  Lattice lattice_;
  SpeciesSet species_;
  std::vector<Configuration> states_;
};

/// Master-equation generator in the convention dp/dt = Q p with p a column of
/// state probabilities: Q(to, from) = rate(from -> to) for to != from,
/// Q(s, s) = -total_rate(s). Columns sum to zero. Events mapping to the same
/// target state accumulate.
Eigen::SparseMatrix<double> build_generator(const Model& model, const StateSpace& space);

/// e^{tG} v for a matrix G with nonnegative off-diagonal entries (a generator
/// or its transpose), by uniformization: the Poisson-weighted power series of
/// P = I + G/Lambda, truncated when the tail weight drops below tol. Long
/// horizons are split into segments to keep the Poisson weights in range.
Eigen::VectorXd uniformized_apply(const Eigen::SparseMatrix<double>& G, Eigen::VectorXd v,
                                  double t, double tol = 1e-12);

/// Dense scaling-and-squaring matrix exponential (small systems; cross-checks
/// the uniformization route in tests).
Eigen::MatrixXd expm_dense(const Eigen::MatrixXd& A);

/// u(t) with u_s(t) = E[f(sigma_t) | sigma_0 = s] for every state s:
/// u(t) = e^{t Q^T} f.
Eigen::VectorXd solve_expectation(const Eigen::SparseMatrix<double>& Q,
                                  const Eigen::VectorXd& f, double t);

/// Distribution of sigma_t from a deterministic initial state.
Eigen::VectorXd exact_marginal(const Eigen::SparseMatrix<double>& Q, std::size_t initial,
                               double t);

/// Vector of f over all states of the space.
Eigen::VectorXd observable_vector(const Observable& f, const StateSpace& space);

/// Exact finite-difference curve E[f(sigma_t)] - E[f(eta_t)] for one initial
/// state, where sigma evolves under `a` and eta under `b`.
std::vector<double> exact_fd(const Model& a, const Model& b, const StateSpace& space,
                             const Observable& f, const Configuration& initial,
                             const std::vector<double>& times);

/// Normalized null vector of Q (stationary distribution; assumes the chain is
/// irreducible so the null space is one-dimensional).
Eigen::VectorXd stationary(const Eigen::SparseMatrix<double>& Q);

}  // namespace kmc
