#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include "support/instances.hpp"
#include "turnpike/steady_pair.hpp"

using namespace turnpike;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<int>(v.size()));
  int i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

struct Prepared {
  LinearSystem sys;
  KalmanDecomposition dec;
  FeasibilitySpaces spaces;
};

Prepared prepare(const LinearSystem& sys) {
  KalmanDecomposition dec = decompose(sys);
  FeasibilitySpaces sp = build_feasibility_spaces(dec, sys);
  return Prepared{sys, std::move(dec), std::move(sp)};
}

}  // namespace

TEST_CASE("frozen-state instance: anchored optimum tracks the frozen coordinate") {
  const Prepared p = prepare(instances::frozen_state_system());
  const QuadraticCost cost = instances::identity_cost(2, 1);

  const FeasibilityCertificate cert = certify(p.spaces, p.dec, vec({1.0, 3.0}));
  const Eigen::VectorXd y2 = steady_y2(cert, p.spaces);
  REQUIRE(y2.size() == 1);
  CHECK((p.dec.P2 * y2 - vec({0.0, 3.0})).norm() < 1e-12);

  const ReducedSolution red = solve_reduced_kkt(p.sys, p.dec, cost, y2);
  CHECK(red.y1.norm() < 1e-12);
  CHECK(red.u.norm() < 1e-12);
  CHECK(red.nu.norm() < 1e-12);
  CHECK(red.iters <= 2);

  const SteadyPair sp = assemble_steady(p.sys, p.dec, cost, p.spaces, cert, red);
  CHECK((sp.x_star - vec({0.0, 3.0})).norm() < 1e-12);
  CHECK(sp.u_star.norm() < 1e-12);
  CHECK(sp.v_star == doctest::Approx(4.5).epsilon(1e-14));
  CHECK(sp.kkt_residual < 1e-12);
  // Anchor multiplier in state coordinates: P2 lambda2 = -(0, 3).
  CHECK((p.dec.P2 * sp.lambda2 - vec({0.0, -3.0})).norm() < 1e-12);
  CHECK(sp.lambda1.norm() < 1e-12);

  // Second frozen level: distinct steady pair for a distinct initial state.
  const FeasibilityCertificate cert2 = certify(p.spaces, p.dec, vec({1.0, -1.0}));
  const SteadyPair sp2 = compute_steady(p.sys, p.dec, cost, p.spaces, cert2);
  CHECK((sp2.x_star - vec({0.0, -1.0})).norm() < 1e-12);
  CHECK(sp2.v_star == doctest::Approx(0.5).epsilon(1e-14));
  CHECK((sp.x_star - sp2.x_star).norm() == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("steady pair for the fully controllable scalar problem") {
  const Prepared p = prepare(instances::scalar_lq());
  const QuadraticCost cost = instances::identity_cost(1, 1);
  const FeasibilityCertificate cert = certify(p.spaces, p.dec, vec({5.0}));
  CHECK(cert.feasible);  // trivially: no frozen part at all
  const SteadyPair sp = compute_steady(p.sys, p.dec, cost, p.spaces, cert);
  CHECK(sp.x_star.norm() < 1e-12);
  CHECK(sp.u_star.norm() < 1e-12);
  CHECK(sp.v_star == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(sp.lambda2.size() == 0);
}

TEST_CASE("anchor is refused for infeasible certificates") {
  const Prepared p = prepare(instances::rotor_system());
  const FeasibilityCertificate bad = certify(p.spaces, p.dec, vec({1.0, 1.0, 0.0}));
  CHECK_THROWS_AS(steady_y2(bad, p.spaces), AssumptionError);
}

TEST_CASE("no control authority at all: pure unconstrained minimisation") {
  Eigen::MatrixXd A(2, 2), B(2, 1);
  A << -1.0, 0.0, 0.0, -2.0;
  B << 0.0, 0.0;
  const Prepared p = prepare(LinearSystem::make(A, B, Eigen::VectorXd::Zero(2)));
  REQUIRE(p.dec.k == 0);

  // f = (|x|^2 + u^2)/2 + 0.3 u: optimal control -0.3 regardless of the state.
  QuadraticCost cost(Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Zero(2, 1),
                     Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Zero(2), vec({0.3}), 0.0);
  const FeasibilityCertificate cert = certify(p.spaces, p.dec, vec({0.4, -0.9}));
  CHECK(cert.feasible);  // A22 stable, so every state settles
  const SteadyPair sp = compute_steady(p.sys, p.dec, cost, p.spaces, cert);
  CHECK(sp.x_star.norm() < 1e-12);
  CHECK(sp.u_star(0) == doctest::Approx(-0.3).epsilon(1e-12));
  CHECK(sp.kkt_residual < 1e-10);
}

TEST_CASE("Newton path agrees with the dense saddle oracle on random instances") {
  detail::Rng rng(4242);
  int done = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform() * 4);
    const int m = 1 + static_cast<int>(rng.uniform() * 2);
    const int k = 1 + static_cast<int>(rng.uniform() * n);
    auto planted = instances::planted_system(rng, n, m, std::min(k, n));
    planted.sys.b = planted.sys.A * rng.gaussian_vector(n) + planted.sys.B * rng.gaussian_vector(m);
    const KalmanDecomposition dec = decompose(planted.sys);
    FeasibilitySpaces spaces;
    try {
      spaces = build_feasibility_spaces(dec, planted.sys);
    } catch (const AssumptionError&) {
      continue;
    }

    Eigen::VectorXd combo = Eigen::VectorXd::Zero(dec.P2.cols());
    if (spaces.d1() > 0) combo += spaces.V1 * rng.gaussian_vector(spaces.d1());
    if (spaces.d2() > 0) combo += spaces.V2 * rng.gaussian_vector(spaces.d2());
    const Eigen::VectorXd x0 = dec.P1 * rng.gaussian_vector(dec.k) + dec.P2 * (combo - spaces.c);
    const FeasibilityCertificate cert = certify(spaces, dec, x0);
    if (!cert.feasible) continue;

    const QuadraticCost cost = instances::random_quadratic_cost(rng, n, m);
    const SteadyPair sp = compute_steady(planted.sys, dec, cost, spaces, cert);
    const SaddlePoint oracle = qp_oracle_steady(planted.sys, dec, cost, steady_y2(cert, spaces));

    const double xs = 1.0 + oracle.x.norm();
    const double us = 1.0 + oracle.u.norm();
    CHECK((sp.x_star - oracle.x).norm() / xs < 1e-7);
    CHECK((sp.u_star - oracle.u).norm() / us < 1e-7);
    CHECK(std::abs(sp.v_star - oracle.value) / (1.0 + std::abs(oracle.value)) < 1e-9);
    CHECK(sp.kkt_residual < 1e-10 * (1.0 + sp.x_star.norm() + sp.lambda1.norm()));
    ++done;
  }
  CHECK(done >= 15);
}

TEST_CASE("pair is optimal within the anchored equilibrium set") {
  detail::Rng rng(515);
  const Prepared p = prepare(instances::frozen_state_system());
  const QuadraticCost cost = instances::random_quadratic_cost(rng, 2, 1);
  const FeasibilityCertificate cert = certify(p.spaces, p.dec, vec({0.3, 1.2}));
  const SteadyPair sp = compute_steady(p.sys, p.dec, cost, p.spaces, cert);

  // Feasible directions: kernel of [A B; P2' 0].
  Eigen::MatrixXd C(2 + 1, 3);
  C.topLeftCorner(2, 2) = p.sys.A;
  C.topRightCorner(2, 1) = p.sys.B;
  C.bottomLeftCorner(1, 2) = p.dec.P2.transpose();
  C.bottomRightCorner(1, 1).setZero();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(C);
  const Eigen::MatrixXd K = lu.kernel();
  REQUIRE(K.cols() >= 1);
  for (int s = 0; s < 50; ++s) {
    const Eigen::VectorXd dir = K * rng.gaussian_vector(static_cast<int>(K.cols()));
    const Eigen::VectorXd z = sp.x_star + dir.head(2);
    const Eigen::VectorXd u = sp.u_star + dir.tail(1);
    CHECK(cost.eval(z, u) >= sp.v_star - 1e-9);
  }
}

TEST_CASE("perturbed cost needs and survives several Newton steps") {
  const Prepared p = prepare(instances::frozen_state_system());
  QuadraticCost base(Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Zero(2, 1),
                     Eigen::MatrixXd::Identity(1, 1), vec({0.7, 0.0}), vec({-0.4}), 0.0);
  PerturbedQuadraticCost cost(base, vec({0.8, 0.2}), vec({1.5}));
  const FeasibilityCertificate cert = certify(p.spaces, p.dec, vec({1.0, 3.0}));
  const SteadyPair sp = compute_steady(p.sys, p.dec, cost, p.spaces, cert);
  CHECK(sp.newton_iters >= 2);
  CHECK(sp.kkt_residual < 1e-9);
  // Frozen coordinate is pinned regardless of the cost reshaping.
  CHECK(sp.x_star(1) == doctest::Approx(3.0).epsilon(1e-12));

  // Independent 1-D oracle: equilibria are x1 = u, x2 = 3, so the anchored
  // problem reduces to minimising h(u) = f((u, 3), u). Ternary search.
  auto h = [&](double u) { return cost.eval(vec({u, 3.0}), vec({u})); };
  double lo = -5.0, hi = 5.0;
  for (int it = 0; it < 200; ++it) {
    const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
    (h(m1) < h(m2) ? hi : lo) = (h(m1) < h(m2) ? m2 : m1);
  }
  const double u_oracle = 0.5 * (lo + hi);
  CHECK(sp.u_star(0) == doctest::Approx(u_oracle).epsilon(1e-7));
  CHECK(sp.x_star(0) == doctest::Approx(u_oracle).epsilon(1e-7));
  CHECK(sp.v_star == doctest::Approx(h(u_oracle)).epsilon(1e-12));

  // The anchored-set optimality survives the non-quadratic terms.
  detail::Rng rng(99);
  for (int s = 0; s < 30; ++s) {
    const double du = rng.gaussian();
    // Equilibria of this system: x1 = u, x2 anchored at 3.
    const Eigen::VectorXd u = sp.u_star + vec({du});
    const Eigen::VectorXd z = vec({sp.u_star(0) + du, 3.0});
    CHECK(cost.eval(z, u) >= sp.v_star - 1e-9);
  }
}
