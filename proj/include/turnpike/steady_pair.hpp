#pragma once

#include <Eigen/Dense>

#include "turnpike/feasibility.hpp"
#include "turnpike/stage_cost.hpp"

namespace turnpike {

struct NewtonOptions {
  double tol = 1e-10;
  int max_iter = 100;
  double armijo_slope = 1e-4;
  double backtrack = 0.5;
};

// Static optimum anchored to an initial state's certificate, with the
// multipliers of its stationarity system. lambda1 is the multiplier of the
// equilibrium constraint Ax + Bu + b = 0 written in state coordinates; the
// component along P2 is gauged to zero (it is not determined by the system).
// lambda2 (length n-k) is the multiplier of the anchor constraint.
struct SteadyPair {
  Eigen::VectorXd x_star;
  Eigen::VectorXd u_star;
  Eigen::VectorXd lambda1;
  Eigen::VectorXd lambda2;
  double v_star = 0.0;
  double kkt_residual = 0.0;
  int newton_iters = 0;
};

// Anchor value q2 - c for the static problem. Requires a feasible certificate.
Eigen::VectorXd steady_y2(const FeasibilityCertificate& cert, const FeasibilitySpaces& spaces);

struct ReducedSolution {
  Eigen::VectorXd y1;  // k
  Eigen::VectorXd u;   // m
  Eigen::VectorXd nu;  // k, multiplier of the reduced equilibrium constraint
  double residual = 0.0;
  int iters = 0;
};

// Damped Newton (Armijo on the squared residual) applied to the reduced
// stationarity system in (y1, u, nu) with the anchor y2 eliminated.
ReducedSolution solve_reduced_kkt(const LinearSystem& sys, const KalmanDecomposition& dec,
                                  const StageCost& cost, const Eigen::VectorXd& y2_star,
                                  const NewtonOptions& opts = {});

// Lifts a reduced solution back to state coordinates, recovers lambda2 from
// the P2 component of the stationarity equation, and verifies the full
// first-order system to kkt_tol (InternalError on failure). The y2 overload
// accepts any anchor, e.g. the projection q2 - c of an infeasible state; the
// certificate overload requires a feasible certificate.
SteadyPair assemble_steady(const LinearSystem& sys, const KalmanDecomposition& dec,
                           const StageCost& cost, const FeasibilitySpaces& spaces,
                           const Eigen::VectorXd& y2_star, const ReducedSolution& red,
                           double kkt_tol = 1e-8);

SteadyPair assemble_steady(const LinearSystem& sys, const KalmanDecomposition& dec,
                           const StageCost& cost, const FeasibilitySpaces& spaces,
                           const FeasibilityCertificate& cert, const ReducedSolution& red,
                           double kkt_tol = 1e-8);

SteadyPair compute_steady(const LinearSystem& sys, const KalmanDecomposition& dec,
                          const StageCost& cost, const FeasibilitySpaces& spaces,
                          const FeasibilityCertificate& cert, const NewtonOptions& opts = {},
                          double kkt_tol = 1e-8);

// Dense saddle-point reference for quadratic costs: one factorization of the
// full KKT system with constraints Ax + Bu = -b and P2'x = y2*. Used as an
// independent oracle against the Newton path.
struct SaddlePoint {
  Eigen::VectorXd x;
  Eigen::VectorXd u;
  double value = 0.0;
  double residual = 0.0;
};

SaddlePoint qp_oracle_steady(const LinearSystem& sys, const KalmanDecomposition& dec,
                             const QuadraticCost& cost, const Eigen::VectorXd& y2_star);

}  // namespace turnpike
