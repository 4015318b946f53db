#include "turnpike/steady_pair.hpp"

#include <cmath>
#include <sstream>

namespace turnpike {

Eigen::VectorXd steady_y2(const FeasibilityCertificate& cert, const FeasibilitySpaces& spaces) {
  if (!cert.feasible)
    throw AssumptionError("steady pair requested for an initial state certified " +
                          std::string(verdict_name(cert.verdict)));
  return cert.q2 - spaces.c;
}

namespace {

struct ReducedSystem {
  const LinearSystem& sys;
  const KalmanDecomposition& dec;
  const StageCost& cost;
  Eigen::VectorXd x_base;  // P2 y2*
  Eigen::VectorXd d3;      // -P1'b - A12 y2*
  int k, m;

  Eigen::VectorXd residual(const Eigen::VectorXd& w) const {
    const Eigen::VectorXd z = w.head(k);
    const Eigen::VectorXd u = w.segment(k, m);
    const Eigen::VectorXd nu = w.tail(k);
    const Eigen::VectorXd x = dec.P1 * z + x_base;
    const Eigen::VectorXd g = cost.grad(x, u);
    Eigen::VectorXd F(2 * k + m);
    F.head(k) = dec.P1.transpose() * g.head(sys.n()) + dec.A11.transpose() * nu;
    F.segment(k, m) = g.tail(m) + dec.B1.transpose() * nu;
    F.tail(k) = dec.A11 * z + dec.B1 * u - d3;
    return F;
  }

  Eigen::MatrixXd jacobian(const Eigen::VectorXd& w) const {
    const Eigen::VectorXd z = w.head(k);
    const Eigen::VectorXd u = w.segment(k, m);
    const Eigen::VectorXd x = dec.P1 * z + x_base;
    const Eigen::MatrixXd H = cost.hess(x, u);
    const int n = sys.n();

    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(2 * k + m, 2 * k + m);
    J.topLeftCorner(k, k) = dec.P1.transpose() * H.topLeftCorner(n, n) * dec.P1;
    J.block(0, k, k, m) = dec.P1.transpose() * H.topRightCorner(n, m);
    J.block(k, 0, m, k) = H.bottomLeftCorner(m, n) * dec.P1;
    J.block(k, k, m, m) = H.bottomRightCorner(m, m);
    J.block(0, k + m, k, k) = dec.A11.transpose();
    J.block(k, k + m, m, k) = dec.B1.transpose();
    J.block(k + m, 0, k, k) = dec.A11;
    J.block(k + m, k, k, m) = dec.B1;
    return J;
  }
};

}  // namespace

ReducedSolution solve_reduced_kkt(const LinearSystem& sys, const KalmanDecomposition& dec,
                                  const StageCost& cost, const Eigen::VectorXd& y2_star,
                                  const NewtonOptions& opts) {
  if (y2_star.size() != dec.P2.cols()) throw ConfigError("anchor dimension mismatch");
  const int k = dec.k;
  const int m = sys.m();

  ReducedSystem rs{sys, dec, cost, dec.P2 * y2_star,
                   -(dec.P1.transpose() * sys.b) - dec.A12 * y2_star, k, m};

  Eigen::VectorXd w = Eigen::VectorXd::Zero(2 * k + m);
  Eigen::VectorXd F = rs.residual(w);
  double merit = F.squaredNorm();
  int iter = 0;
  for (; iter < opts.max_iter; ++iter) {
    if (F.lpNorm<Eigen::Infinity>() <= opts.tol) break;

    Eigen::FullPivLU<Eigen::MatrixXd> lu(rs.jacobian(w));
    if (!lu.isInvertible())
      throw SolverError(
          "reduced stationarity Jacobian is singular: lost strong convexity or an "
          "uncontrollable reduced pair");
    const Eigen::VectorXd step = lu.solve(-F);

    double t = 1.0;
    bool accepted = false;
    while (t >= 0x1p-30) {
      const Eigen::VectorXd w_try = w + t * step;
      const Eigen::VectorXd F_try = rs.residual(w_try);
      const double m_try = F_try.squaredNorm();
      if (m_try <= (1.0 - 2.0 * opts.armijo_slope * t) * merit) {
        w = w_try;
        F = F_try;
        merit = m_try;
        accepted = true;
        break;
      }
      t *= opts.backtrack;
    }
    if (!accepted) {
      std::ostringstream os;
      os << "line search stalled at residual " << F.lpNorm<Eigen::Infinity>();
      throw SolverError(os.str());
    }
  }
  if (F.lpNorm<Eigen::Infinity>() > opts.tol) {
    std::ostringstream os;
    os << "reduced stationarity Newton did not reach " << opts.tol << " in " << opts.max_iter
       << " iterations (residual " << F.lpNorm<Eigen::Infinity>() << ")";
    throw SolverError(os.str());
  }

  ReducedSolution sol;
  sol.y1 = w.head(k);
  sol.u = w.segment(k, m);
  sol.nu = w.tail(k);
  sol.residual = F.lpNorm<Eigen::Infinity>();
  sol.iters = iter;
  return sol;
}

SteadyPair assemble_steady(const LinearSystem& sys, const KalmanDecomposition& dec,
                           const StageCost& cost, const FeasibilitySpaces& spaces,
                           const Eigen::VectorXd& y2_star, const ReducedSolution& red,
                           double kkt_tol) {
  const int n = sys.n();
  const int m = sys.m();
  const Eigen::VectorXd& y2 = y2_star;

  SteadyPair sp;
  sp.x_star = dec.P1 * red.y1 + dec.P2 * y2;
  sp.u_star = red.u;
  sp.lambda1 = dec.P1 * red.nu;  // P2 component gauged to zero
  const Eigen::VectorXd g = cost.grad(sp.x_star, sp.u_star);
  sp.lambda2 = -(dec.P2.transpose() * g.head(n) + dec.A12.transpose() * red.nu);
  sp.v_star = cost.eval(sp.x_star, sp.u_star);
  sp.newton_iters = red.iters;

  // Full first-order system, all four blocks.
  const Eigen::VectorXd r1 = g.head(n) + sys.A.transpose() * sp.lambda1 + dec.P2 * sp.lambda2;
  const Eigen::VectorXd r2 = g.tail(m) + sys.B.transpose() * sp.lambda1;
  const Eigen::VectorXd r3 = sys.A * sp.x_star + sys.B * sp.u_star + sys.b;
  const Eigen::VectorXd r4 = dec.P2.transpose() * sp.x_star - y2;
  sp.kkt_residual = std::sqrt(r1.squaredNorm() + r2.squaredNorm() + r3.squaredNorm() + r4.squaredNorm());

  const double scale = 1.0 + sp.x_star.norm() + sp.u_star.norm() + sp.lambda1.norm();
  if (sp.kkt_residual > kkt_tol * scale) {
    std::ostringstream os;
    os << "assembled steady pair fails its stationarity system (residual " << sp.kkt_residual << ")";
    throw InternalError(os.str());
  }
  return sp;
}

SteadyPair assemble_steady(const LinearSystem& sys, const KalmanDecomposition& dec,
                           const StageCost& cost, const FeasibilitySpaces& spaces,
                           const FeasibilityCertificate& cert, const ReducedSolution& red,
                           double kkt_tol) {
  return assemble_steady(sys, dec, cost, spaces, steady_y2(cert, spaces), red, kkt_tol);
}

SteadyPair compute_steady(const LinearSystem& sys, const KalmanDecomposition& dec,
                          const StageCost& cost, const FeasibilitySpaces& spaces,
                          const FeasibilityCertificate& cert, const NewtonOptions& opts,
                          double kkt_tol) {
  const Eigen::VectorXd y2 = steady_y2(cert, spaces);
  const ReducedSolution red = solve_reduced_kkt(sys, dec, cost, y2, opts);
  return assemble_steady(sys, dec, cost, spaces, cert, red, kkt_tol);
}

SaddlePoint qp_oracle_steady(const LinearSystem& sys, const KalmanDecomposition& dec,
                             const QuadraticCost& cost, const Eigen::VectorXd& y2_star) {
  const int n = sys.n();
  const int m = sys.m();
  const int p = n + static_cast<int>(dec.P2.cols());

  Eigen::MatrixXd KKT = Eigen::MatrixXd::Zero(n + m + p, n + m + p);
  KKT.topLeftCorner(n + m, n + m) = cost.stacked_hessian();
  Eigen::MatrixXd C(p, n + m);
  C.topLeftCorner(n, n) = sys.A;
  C.topRightCorner(n, m) = sys.B;
  C.bottomLeftCorner(p - n, n) = dec.P2.transpose();
  C.bottomRightCorner(p - n, m).setZero();
  KKT.bottomLeftCorner(p, n + m) = C;
  KKT.topRightCorner(n + m, p) = C.transpose();

  Eigen::VectorXd rhs(n + m + p);
  rhs.head(n) = -cost.q();
  rhs.segment(n, m) = -cost.r();
  rhs.segment(n + m, n) = -sys.b;
  rhs.tail(p - n) = y2_star;

  // The multiplier block can be rank-deficient when A22 is singular (the same
  // gauge freedom the reduced path fixes by hand), so take the minimum-norm
  // solution and check consistency afterwards.
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(KKT);
  const Eigen::VectorXd sol = cod.solve(rhs);

  SaddlePoint out;
  out.x = sol.head(n);
  out.u = sol.segment(n, m);
  out.value = cost.eval(out.x, out.u);
  out.residual = (KKT * sol - rhs).norm();
  if (out.residual > 1e-8 * (1.0 + rhs.norm()))
    throw SolverError("static saddle-point system is inconsistent (anchor incompatible with drift)");
  return out;
}

}  // namespace turnpike
