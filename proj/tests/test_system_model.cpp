#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "support/finite_difference.hpp"
#include "turnpike/linear_system.hpp"
#include "turnpike/stage_cost.hpp"

using namespace turnpike;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<int>(v.size()));
  int i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

QuadraticCost simple_quadratic(int n, int m) {
  return QuadraticCost(Eigen::MatrixXd::Identity(n, n), Eigen::MatrixXd::Zero(n, m),
                       Eigen::MatrixXd::Identity(m, m), Eigen::VectorXd::Zero(n),
                       Eigen::VectorXd::Zero(m), 0.0);
}

}  // namespace

TEST_CASE("linear system validation") {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2, 2);
  Eigen::MatrixXd B = Eigen::MatrixXd::Ones(2, 1);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(2);
  CHECK_NOTHROW(LinearSystem::make(A, B, b));
  CHECK_THROWS_AS(LinearSystem::make(Eigen::MatrixXd::Zero(2, 3), B, b), ConfigError);
  CHECK_THROWS_AS(LinearSystem::make(A, Eigen::MatrixXd::Ones(3, 1), b), ConfigError);
  CHECK_THROWS_AS(LinearSystem::make(A, B, Eigen::VectorXd::Zero(3)), ConfigError);
  Eigen::MatrixXd bad = A;
  bad(0, 0) = std::nan("");
  CHECK_THROWS_AS(LinearSystem::make(bad, B, b), ConfigError);
}

TEST_CASE("log cosh against high-precision oracle") {
  // Frozen from a 40-digit scalar evaluation.
  CHECK(log_cosh(0.0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(log_cosh(1.0) == doctest::Approx(0.4337808304830272).epsilon(1e-14));
  CHECK(log_cosh(-3.0) == doctest::Approx(2.309328504577785).epsilon(1e-14));
  CHECK(log_cosh(0.5) == doctest::Approx(0.1201145069582775).epsilon(1e-14));
  CHECK(log_cosh(20.0) == doctest::Approx(19.30685281944005).epsilon(1e-14));
  // No overflow far outside cosh's range; phi(s) ~ |s| - log 2 there.
  CHECK(log_cosh(750.0) == doctest::Approx(749.3068528194401).epsilon(1e-14));
  CHECK(log_cosh(-750.0) == doctest::Approx(749.3068528194401).epsilon(1e-14));
  CHECK(std::isfinite(log_cosh(1e308)));
}

TEST_CASE("quadratic cost value, gradient, Hessian") {
  Eigen::MatrixXd Q(2, 2), S(2, 1), R(1, 1);
  Q << 2.0, 0.3, 0.3, 1.5;
  S << 0.2, -0.1;
  R << 1.0;
  QuadraticCost cost(Q, S, R, vec({0.1, -0.2}), vec({0.4}), 0.7);

  const Eigen::VectorXd x = vec({0.8, -1.1});
  const Eigen::VectorXd u = vec({0.3});

  auto stacked = [&](const Eigen::VectorXd& z) { return cost.eval(z.head(2), z.tail(1)); };
  Eigen::VectorXd z(3);
  z << x, u;
  CHECK((cost.grad(x, u) - fd::gradient(stacked, z)).norm() < 1e-8);

  auto g = [&](const Eigen::VectorXd& zz) { return cost.grad(zz.head(2), zz.tail(1)); };
  CHECK((cost.hess(x, u) - fd::jacobian(g, z)).norm() < 1e-7);

  // Hand value: 1/2 x'Qx + x'Su + 1/2 u'Ru + q'x + r'u + c0.
  const double by_hand = 0.5 * x.dot(Q * x) + x.dot(S * u) + 0.5 * u.dot(R * u) + 0.1 * 0.8 +
                         (-0.2) * (-1.1) + 0.4 * 0.3 + 0.7;
  CHECK(cost.eval(x, u) == doctest::Approx(by_hand).epsilon(1e-15));

  CHECK_THROWS_AS(cost.eval(vec({1.0}), u), ConfigError);
  CHECK_THROWS_AS(QuadraticCost(Eigen::MatrixXd::Ones(2, 3), S, R, vec({0.0, 0.0}), vec({0.0}), 0.0),
                  ConfigError);
}

TEST_CASE("perturbed cost matches oracle value and derivatives") {
  // 1/2(x^2 + u^2) + phi(x) at x = 1, u = 0.
  QuadraticCost base = simple_quadratic(1, 1);
  PerturbedQuadraticCost cost(base, vec({1.0}), vec({0.0}));
  CHECK(cost.eval(vec({1.0}), vec({0.0})) == doctest::Approx(0.9337808304830272).epsilon(1e-14));

  PerturbedQuadraticCost cost2(simple_quadratic(2, 2), vec({0.7, 0.0}), vec({0.2, 1.3}));
  const Eigen::VectorXd x = vec({0.9, -2.0});
  const Eigen::VectorXd u = vec({0.1, 1.7});
  Eigen::VectorXd z(4);
  z << x, u;
  auto stacked = [&](const Eigen::VectorXd& zz) { return cost2.eval(zz.head(2), zz.tail(2)); };
  CHECK((cost2.grad(x, u) - fd::gradient(stacked, z)).norm() < 1e-8);
  auto g = [&](const Eigen::VectorXd& zz) { return cost2.grad(zz.head(2), zz.tail(2)); };
  CHECK((cost2.hess(x, u) - fd::jacobian(g, z)).norm() < 1e-6);

  CHECK_THROWS_AS(PerturbedQuadraticCost(base, vec({-0.1}), vec({0.0})), ConfigError);
}

TEST_CASE("strong convexity sampling honours the declared modulus") {
  Eigen::MatrixXd Q(1, 1), S(1, 1), R(1, 1);
  Q << 2.0;
  S << 0.0;
  R << 0.5;  // stacked spectrum {2, 0.5}

  const Eigen::VectorXd lo = vec({-2.0});
  const Eigen::VectorXd hi = vec({2.0});

  QuadraticCost ok(Q, S, R, vec({0.0}), vec({0.0}), 0.0, 0.5);
  auto res = check_strong_convexity(ok, lo, hi, lo, hi, 64, 7);
  CHECK(res.holds);
  CHECK(res.observed == doctest::Approx(0.5).epsilon(1e-12));

  QuadraticCost overdeclared(Q, S, R, vec({0.0}), vec({0.0}), 0.0, 0.6);
  res = check_strong_convexity(overdeclared, lo, hi, lo, hi, 64, 7);
  CHECK_FALSE(res.holds);
  CHECK(res.observed == doctest::Approx(0.5).epsilon(1e-12));

  // Deliberately indefinite block.
  Eigen::MatrixXd Qneg(1, 1);
  Qneg << -1.0;
  QuadraticCost indefinite(Qneg, S, R, vec({0.0}), vec({0.0}), 0.0, 0.1);
  res = check_strong_convexity(indefinite, lo, hi, lo, hi, 64, 7);
  CHECK_FALSE(res.holds);
  CHECK(res.observed == doctest::Approx(-1.0).epsilon(1e-12));

  // Auto-derived modulus must refuse an indefinite stack outright.
  CHECK_THROWS_AS(QuadraticCost(Qneg, S, R, vec({0.0}), vec({0.0}), 0.0), ConfigError);

  // Perturbed family keeps the base modulus valid (log-cosh adds PSD diagonal).
  PerturbedQuadraticCost pert(QuadraticCost(Q, S, R, vec({0.0}), vec({0.0}), 0.0, 0.5),
                              vec({0.4}), vec({0.9}));
  res = check_strong_convexity(pert, lo, hi, lo, hi, 200, 11);
  CHECK(res.holds);
  CHECK(res.observed >= 0.5 - 1e-12);
}

TEST_CASE("cross-gain sampling") {
  Eigen::MatrixXd Q(1, 1), S(1, 1), R(1, 1);
  Q << 2.0;
  S << 0.5;
  R << 1.0;
  QuadraticCost cost(Q, S, R, vec({0.0}), vec({0.0}), 0.0);
  REQUIRE(cost.cross_gain_bound(3.0).has_value());
  CHECK(*cost.cross_gain_bound(3.0) == doctest::Approx(0.5).epsilon(1e-14));

  auto res = check_cross_gain(cost, 3.0, 3.0, 128, 5);
  CHECK(res.holds);
  CHECK(res.observed == doctest::Approx(0.5).epsilon(1e-12));  // constant ratio for quadratics

  // Log-cosh control terms only shrink the ratio (f_uu grows).
  PerturbedQuadraticCost pert(cost, vec({0.0}), vec({2.0}));
  res = check_cross_gain(pert, 3.0, 3.0, 128, 5);
  CHECK(res.holds);
  CHECK(res.observed <= 0.5 + 1e-12);

  // Same seed, same answer.
  auto res2 = check_cross_gain(pert, 3.0, 3.0, 128, 5);
  CHECK(res.observed == res2.observed);
}
