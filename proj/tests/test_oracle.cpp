#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "kmc/errors.hpp"
#include "kmc/oracle.hpp"

using namespace kmc;

namespace {

Model two_state_model(double c_a, double c_d) {
  Params p;
  p.beta = 0.0;  // no interaction: desorption rate is exactly c_d
  p.c_a = c_a;
  p.c_d = c_d;
  return Model(ModelKind::ising_ad, Lattice::line(1), p);
}

}  // namespace

TEST_CASE("single-site chain matches the closed-form occupation law") {
  const double c_a = 0.6, c_d = 1.9;
  const Model m = two_state_model(c_a, c_d);
  const StateSpace space(m.lattice(), m.species());
  REQUIRE(space.size() == 2);

  const Eigen::SparseMatrix<double> Q = build_generator(m, space);
  CHECK(Q.coeff(1, 0) == c_a);
  CHECK(Q.coeff(0, 0) == -c_a);
  CHECK(Q.coeff(0, 1) == c_d);
  CHECK(Q.coeff(1, 1) == -c_d);

  const double k = c_a + c_d;
  for (double t : {0.1, 0.5, 1.0, 3.0}) {
    const double want = c_a / k * (1.0 - std::exp(-k * t));
    const Eigen::VectorXd p = exact_marginal(Q, 0, t);
    CHECK(p[1] == doctest::Approx(want).epsilon(1e-10));
    CHECK(p[0] + p[1] == doctest::Approx(1.0).epsilon(1e-12));

    // Expectation route: coverage on one site is the occupation probability.
    const Eigen::VectorXd f = observable_vector(Observable::coverage(0), space);
    CHECK(solve_expectation(Q, f, t)[0] == doctest::Approx(want).epsilon(1e-10));
  }

  const Eigen::VectorXd pi = stationary(Q);
  CHECK(pi[0] == doctest::Approx(c_d / k).epsilon(1e-12));
  CHECK(pi[1] == doctest::Approx(c_a / k).epsilon(1e-12));
}

TEST_CASE("long horizons are split into stable uniformization segments") {
  // Total rate 600 and t = 2 put Lambda*t far beyond one segment's range.
  const Model m = two_state_model(300.0, 300.0);
  const StateSpace space(m.lattice(), m.species());
  const Eigen::SparseMatrix<double> Q = build_generator(m, space);
  CHECK(exact_marginal(Q, 0, 2.0)[1] == doctest::Approx(0.5).epsilon(1e-10));
  const double want = 0.5 * (1.0 - std::exp(-600.0 * 0.001));
  CHECK(exact_marginal(Q, 0, 0.001)[1] == doctest::Approx(want).epsilon(1e-10));
}

TEST_CASE("generator columns balance and the diagonal carries the exit rate") {
  const Model m(ModelKind::ising_ad, Lattice::line(3), Params{});
  const StateSpace space(m.lattice(), m.species());
  REQUIRE(space.size() == 8);
  const Eigen::SparseMatrix<double> Q = build_generator(m, space);

  for (std::size_t s = 0; s < space.size(); ++s) {
    const auto col = static_cast<Eigen::Index>(s);
    double sum = 0.0;
    int off_diag = 0;
    for (Eigen::SparseMatrix<double>::InnerIterator it(Q, col); it; ++it) {
      sum += it.value();
      if (it.row() != col) {
        CHECK(it.value() >= 0.0);
        ++off_diag;
      }
    }
    CHECK(sum == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(Q.coeff(col, col) == -m.total_rate(space.state(s)));
    CHECK(off_diag == 3);  // one flip per site, all targets distinct
  }
}

TEST_CASE("frozen transient expectations on 3-site rings") {
  // Adsorption/desorption at unit parameters, started empty.
  {
    const Model m(ModelKind::ising_ad, Lattice::line(3), Params{});
    const StateSpace space(m.lattice(), m.species());
    const Eigen::SparseMatrix<double> Q = build_generator(m, space);
    const Eigen::VectorXd f = observable_vector(Observable::coverage(0), space);
    const auto s0 = static_cast<Eigen::Index>(space.index(Configuration(m.lattice(), 0)));
    CHECK(solve_expectation(Q, f, 0.5)[s0] ==
          doctest::Approx(0.2639348230974210).epsilon(1e-9));
    CHECK(solve_expectation(Q, f, 1.0)[s0] ==
          doctest::Approx(0.3662357462609074).epsilon(1e-9));
    CHECK(solve_expectation(Q, f, 2.0)[s0] ==
          doctest::Approx(0.4525905670681993).epsilon(1e-9));
  }
  // With hops enabled and uneven parameters, started full.
  {
    Params p;
    p.beta = 0.8;
    p.J = 1.1;
    p.h = 0.4;
    p.c_a = 0.7;
    p.c_d = 1.3;
    p.c_diff = 0.9;
    const Model m(ModelKind::ad_diffusion, Lattice::line(3), p);
    const StateSpace space(m.lattice(), m.species());
    const Eigen::SparseMatrix<double> Q = build_generator(m, space);
    const Eigen::VectorXd f = observable_vector(Observable::coverage(0), space);
    const auto s0 = static_cast<Eigen::Index>(space.index(Configuration(m.lattice(), 1)));
    CHECK(solve_expectation(Q, f, 0.8)[s0] ==
          doctest::Approx(0.7813697201908945).epsilon(1e-9));
  }
}

TEST_CASE("uniformization agrees with the dense matrix exponential") {
  Params p;
  p.c_a = 0.4;
  p.c_r = 1.3;
  const Model m(ModelKind::zgb, Lattice::grid(2, 2), p);
  const StateSpace space(m.lattice(), m.species());
  REQUIRE(space.size() == 81);
  const Eigen::SparseMatrix<double> Q = build_generator(m, space);
  const std::size_t s0 = space.index(Configuration(m.lattice(), 0));

  for (double t : {0.7, 3.0}) {
    const Eigen::VectorXd p1 = exact_marginal(Q, s0, t);
    const Eigen::MatrixXd E = expm_dense(Eigen::MatrixXd(Q) * t);
    const Eigen::VectorXd p2 = E.col(static_cast<Eigen::Index>(s0));
    CHECK((p1 - p2).lpNorm<Eigen::Infinity>() <= 1e-9);
    CHECK(p1.sum() == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(p1.minCoeff() >= -1e-12);
  }
}

TEST_CASE("forward and adjoint evolutions give the same expectation") {
  const Model m(ModelKind::ising_ad, Lattice::line(3), Params{});
  const StateSpace space(m.lattice(), m.species());
  const Eigen::SparseMatrix<double> Q = build_generator(m, space);
  const Eigen::VectorXd f =
      observable_vector(Observable::hamiltonian(1.2, 0.3, 0), space);
  const std::size_t s0 = space.index(Configuration(m.lattice(), 0));
  for (double t : {0.4, 1.7}) {
    const double via_marginal = f.dot(exact_marginal(Q, s0, t));
    const double via_adjoint = solve_expectation(Q, f, t)[static_cast<Eigen::Index>(s0)];
    CHECK(via_marginal == doctest::Approx(via_adjoint).epsilon(1e-10));
  }
}

TEST_CASE("exact finite differences are antisymmetric and vanish on equal models") {
  const Model a(ModelKind::ising_ad, Lattice::line(3), Params{});
  const Model b = a.with_params(perturb(a.params(), {Param::beta, 0.2}));
  const StateSpace space(a.lattice(), a.species());
  const Observable f = Observable::coverage(0);
  const Configuration init(a.lattice(), 0);
  const std::vector<double> times = {0.5, 1.0, 2.0};

  const auto ab = exact_fd(a, b, space, f, init, times);
  const auto ba = exact_fd(b, a, space, f, init, times);
  const auto aa = exact_fd(a, a, space, f, init, times);
  REQUIRE(ab.size() == 3);
  for (std::size_t i = 0; i < ab.size(); ++i) {
    CHECK(ab[i] == -ba[i]);
    CHECK(aa[i] == 0.0);
    CHECK(ab[i] != 0.0);  // a real perturbation moves the curve
  }
}

TEST_CASE("state spaces round-trip indices and refuse oversized systems") {
  Params zp;
  zp.c_a = 0.5;
  const Model z(ModelKind::zgb, Lattice::grid(2, 2), zp);
  const StateSpace space(z.lattice(), z.species());
  REQUIRE(space.size() == 81);
  for (std::size_t i = 0; i < space.size(); ++i) CHECK(space.index(space.state(i)) == i);

  const Model ising(ModelKind::ising_ad, Lattice::line(12), Params{});
  CHECK(StateSpace(ising.lattice(), ising.species()).size() == 4096);  // at the budget

  CHECK_THROWS_AS(StateSpace(Lattice::line(13), ising.species()), ConfigError);
  CHECK_THROWS_AS(StateSpace(Lattice::grid(3, 3), z.species()), ConfigError);
  CHECK_THROWS_AS(StateSpace(Lattice::line(64), ising.species()), ConfigError);

  Configuration bad(Lattice::line(12), 0);
  bad[3] = 5;
  CHECK_THROWS_AS(StateSpace(ising.lattice(), ising.species()).index(bad), InvariantError);
}

TEST_CASE("stationary law factorizes when sites do not interact") {
  Params p;
  p.beta = 0.0;
  p.c_a = 0.6;
  p.c_d = 1.9;
  const Model m(ModelKind::ising_ad, Lattice::line(3), p);
  const StateSpace space(m.lattice(), m.species());
  const Eigen::SparseMatrix<double> Q = build_generator(m, space);
  const Eigen::VectorXd pi = stationary(Q);

  const double occ = p.c_a / (p.c_a + p.c_d);
  for (std::size_t s = 0; s < space.size(); ++s) {
    int n = 0;
    for (SiteIndex x = 0; x < 3; ++x) n += space.state(s)[x];
    const double want = std::pow(occ, n) * std::pow(1.0 - occ, 3 - n);
    CHECK(pi[static_cast<Eigen::Index>(s)] == doctest::Approx(want).epsilon(1e-10));
  }
  CHECK((Q * pi).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("degenerate uniformization inputs") {
  Eigen::VectorXd v(2);
  v << 0.3, 0.7;
  Eigen::SparseMatrix<double> zero(2, 2);
  CHECK(uniformized_apply(zero, v, 5.0) == v);

  const Model m = two_state_model(1.0, 1.0);
  const StateSpace space(m.lattice(), m.species());
  const Eigen::SparseMatrix<double> Q = build_generator(m, space);
  CHECK(uniformized_apply(Q, v, 0.0) == v);
  CHECK_THROWS_AS(uniformized_apply(Q, v, -1.0), InvariantError);
}
