#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include "support/instances.hpp"
#include "turnpike/feasibility.hpp"

using namespace turnpike;

namespace {

Eigen::MatrixXd mat(int r, int c, std::initializer_list<double> vals) {
  Eigen::MatrixXd m(r, c);
  int i = 0;
  for (double v : vals) m(i / c, i % c) = v, ++i;
  return m;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<int>(v.size()));
  int i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

}  // namespace

TEST_CASE("offset equation: solvable, minimum norm, inconsistent") {
  CHECK(solve_offset(mat(1, 1, {-1.0}), vec({2.0})).isApprox(vec({-2.0}), 1e-14));

  // Singular but consistent: minimum-norm picks the zero component.
  const Eigen::VectorXd c = solve_offset(mat(2, 2, {1.0, 0.0, 0.0, 0.0}), vec({3.0, 0.0}));
  CHECK(c.isApprox(vec({3.0, 0.0}), 1e-13));

  CHECK_THROWS_AS(solve_offset(mat(1, 1, {0.0}), vec({1.0})), AssumptionError);
  CHECK(solve_offset(Eigen::MatrixXd(0, 0), Eigen::VectorXd(0)).size() == 0);
}

TEST_CASE("stable subspace basis") {
  // Triangular with eigenvalues {-1, 2}: stable directions = span e1.
  Eigen::MatrixXd V = stable_subspace_basis(mat(2, 2, {-1.0, 5.0, 0.0, 2.0}));
  REQUIRE(V.cols() == 1);
  CHECK(std::abs(V(0, 0)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(V(1, 0)) < 1e-12);

  // Pure rotation: no stable directions.
  CHECK(stable_subspace_basis(mat(2, 2, {0.0, 1.0, -1.0, 0.0})).cols() == 0);

  // A complex stable pair fills the plane.
  CHECK(stable_subspace_basis(mat(2, 2, {-1.0, 2.0, -2.0, -1.0})).cols() == 2);

  // Mixed: one stable real, one complex unstable pair.
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(3, 3);
  M(0, 0) = -2.0;
  M.bottomRightCorner(2, 2) = mat(2, 2, {0.5, 1.0, -1.0, 0.5});
  Eigen::MatrixXd Vm = stable_subspace_basis(M);
  REQUIRE(Vm.cols() == 1);
  // Invariance: A V lies in span(V).
  const Eigen::MatrixXd AV = M * Vm;
  CHECK((AV - Vm * (Vm.transpose() * AV)).norm() < 1e-12);
}

TEST_CASE("kernel basis is the kernel, not the generalized eigenspace") {
  // Nilpotent Jordan block: eigenvalue 0 has algebraic multiplicity 2 but the
  // kernel is only span e1 — the defective direction must be excluded.
  Eigen::MatrixXd V = kernel_basis(mat(2, 2, {0.0, 1.0, 0.0, 0.0}));
  REQUIRE(V.cols() == 1);
  CHECK(std::abs(V(0, 0)) == doctest::Approx(1.0).epsilon(1e-12));

  CHECK(kernel_basis(mat(2, 2, {0.0, 1.0, -1.0, 0.0})).cols() == 0);
  CHECK(kernel_basis(Eigen::MatrixXd::Zero(2, 2)).cols() == 2);
  CHECK(kernel_basis(mat(1, 1, {0.0})).cols() == 1);
}

TEST_CASE("spaces for the frozen-state system") {
  const LinearSystem sys = instances::frozen_state_system();
  const KalmanDecomposition dec = decompose(sys);
  const FeasibilitySpaces sp = build_feasibility_spaces(dec, sys);
  CHECK(sp.d1() == 0);
  CHECK(sp.d2() == 1);
  CHECK(sp.c.norm() == 0.0);
  CHECK_FALSE(sp.marginal_spectrum);

  // Drift on the frozen coordinate makes the offset equation unsolvable.
  LinearSystem drifted = sys;
  drifted.b = vec({0.0, 1.0});
  CHECK_THROWS_AS(build_feasibility_spaces(dec, drifted), AssumptionError);

  // Drift confined to the reachable coordinate is fine.
  drifted.b = vec({1.0, 0.0});
  CHECK_NOTHROW(build_feasibility_spaces(dec, drifted));
}

TEST_CASE("certification on the frozen-state system") {
  const LinearSystem sys = instances::frozen_state_system();
  const KalmanDecomposition dec = decompose(sys);
  const FeasibilitySpaces sp = build_feasibility_spaces(dec, sys);

  const FeasibilityCertificate cert = certify(sp, dec, vec({1.0, 3.0}));
  CHECK(cert.feasible);
  CHECK(cert.verdict == Verdict::Feasible);
  CHECK(cert.residual < 1e-12);
  // Basis-independent check: reassemble the kernel component in state space.
  CHECK((dec.P2 * cert.q2 - vec({0.0, 3.0})).norm() < 1e-12);
  CHECK(cert.q1.norm() < 1e-12);
}

TEST_CASE("certification on the rotor system") {
  const LinearSystem sys = instances::rotor_system();
  const KalmanDecomposition dec = decompose(sys);
  const FeasibilitySpaces sp = build_feasibility_spaces(dec, sys);
  CHECK(sp.d1() == 0);
  CHECK(sp.d2() == 0);
  CHECK(sp.marginal_spectrum);

  const FeasibilityCertificate bad = certify(sp, dec, vec({1.0, 1.0, 0.0}));
  CHECK_FALSE(bad.feasible);
  CHECK(bad.residual == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(bad.verdict == Verdict::IndeterminateMarginal);
  CHECK(bad.marginal_spectrum);

  const FeasibilityCertificate good = certify(sp, dec, vec({1.0, 0.0, 0.0}));
  CHECK(good.feasible);
  CHECK(good.residual < 1e-12);
}

TEST_CASE("plain rejection when the residual is clearly unstable") {
  Eigen::MatrixXd A = mat(2, 2, {-1.0, 0.0, 0.0, 2.0});
  Eigen::MatrixXd B = mat(2, 1, {1.0, 0.0});
  const LinearSystem sys = LinearSystem::make(A, B, Eigen::VectorXd::Zero(2));
  const KalmanDecomposition dec = decompose(sys);
  const FeasibilitySpaces sp = build_feasibility_spaces(dec, sys);
  CHECK_FALSE(sp.marginal_spectrum);

  const FeasibilityCertificate cert = certify(sp, dec, vec({0.0, 1.0}));
  CHECK_FALSE(cert.feasible);
  CHECK(cert.verdict == Verdict::Infeasible);
  CHECK(cert.residual == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("oblique split with a mixed uncontrollable block") {
  // A22 = diag(-1, 0, 2) in the hidden basis: G1 = e1, G2 = e2, nothing for e3.
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(4, 4);
  A(0, 0) = -0.5;  // controllable part
  A(1, 1) = -1.0;
  A(2, 2) = 0.0;
  A(3, 3) = 2.0;
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(4, 1);
  B(0, 0) = 1.0;
  const LinearSystem sys = LinearSystem::make(A, B, Eigen::VectorXd::Zero(4));
  const KalmanDecomposition dec = decompose(sys);
  REQUIRE(dec.k == 1);
  const FeasibilitySpaces sp = build_feasibility_spaces(dec, sys);
  CHECK(sp.d1() == 1);
  CHECK(sp.d2() == 1);

  const FeasibilityCertificate ok = certify(sp, dec, vec({2.0, 0.7, -1.3, 0.0}));
  CHECK(ok.feasible);
  CHECK((dec.P2 * ok.q1 - vec({0.0, 0.7, 0.0, 0.0})).norm() < 1e-10);
  CHECK((dec.P2 * ok.q2 - vec({0.0, 0.0, -1.3, 0.0})).norm() < 1e-10);

  const FeasibilityCertificate bad = certify(sp, dec, vec({2.0, 0.7, -1.3, 0.4}));
  CHECK_FALSE(bad.feasible);
  CHECK(bad.residual == doctest::Approx(0.4).epsilon(1e-10));
  CHECK(bad.verdict == Verdict::Infeasible);
}

TEST_CASE("random members of the feasible set certify as such") {
  detail::Rng rng(77);
  int checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 3 + static_cast<int>(rng.uniform() * 3);
    const int k = 1 + static_cast<int>(rng.uniform() * (n - 1));
    auto planted = instances::planted_system(rng, n, 1, k);
    // Feasible drift: push b into the image of (A, B).
    planted.sys.b = planted.sys.A * rng.gaussian_vector(n) + planted.sys.B * rng.gaussian_vector(1);
    const KalmanDecomposition dec = decompose(planted.sys);
    FeasibilitySpaces sp;
    try {
      sp = build_feasibility_spaces(dec, planted.sys);
    } catch (const AssumptionError&) {
      continue;  // drift may still be inconsistent when A22 is singular
    }
    const int d = sp.d1() + sp.d2();
    if (d == 0) continue;
    ++checked;

    Eigen::VectorXd combo = Eigen::VectorXd::Zero(dec.P2.cols());
    if (sp.d1() > 0) combo += sp.V1 * rng.gaussian_vector(sp.d1());
    if (sp.d2() > 0) combo += sp.V2 * rng.gaussian_vector(sp.d2());
    const Eigen::VectorXd x =
        dec.P1 * rng.gaussian_vector(dec.k) + dec.P2 * (combo - sp.c);
    const FeasibilityCertificate cert = certify(sp, dec, x);
    CHECK(cert.feasible);
    CHECK(cert.residual <= 1e-8 * (1.0 + cert.w.norm()));
  }
  CHECK(checked > 10);
}
