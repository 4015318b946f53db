#pragma once

#include <Eigen/Dense>

#include "turnpike/kalman.hpp"
#include "turnpike/linear_system.hpp"
#include "turnpike/stage_cost.hpp"
#include "turnpike/steady_pair.hpp"

namespace turnpike {

// Uniform time grid on [0, T] with N intervals.
struct Grid {
  double T = 0.0;
  int N = 0;

  double h() const { return T / N; }
  double node(int i) const { return (T * i) / N; }

  static Grid make(double T, int N);
};

// Discrete trajectory on a Grid. Columns are nodes: x is n x (N+1),
// u is m x (N+1), psi is the costate extracted at the nodes (psi(T) = 0).
struct Trajectory {
  Grid grid;
  Eigen::MatrixXd x;
  Eigen::MatrixXd u;
  Eigen::MatrixXd psi;
  double cost = 0.0;
  int newton_iters = 0;
};

// Trapezoid quadrature of the running cost along a trajectory.
double trapezoid_cost(const StageCost& cost, const Trajectory& traj);

// Max over intervals of |x_{i+1} - x_i - h/2 (F_i + F_{i+1})| / (1 + |x_i|)
// with F = Ax + Bu + b. Zero (to roundoff) for solve_lc output; O(h^2) for a
// sampled smooth solution of the continuous dynamics.
double trapezoid_dynamics_residual(const LinearSystem& sys, const Trajectory& traj);

// First-order optimality residuals of a trajectory/costate triple:
//  - adjoint: trapezoid residual of psi' = -A'psi - f_x, divided by h,
//    maximised over interior intervals (the boundary nodes use one-sided
//    extraction conventions and are excluded);
//  - stationarity: max over nodes of |B'psi + f_u|, excluding the terminal
//    node, where psi is pinned to zero by transversality and the transcribed
//    control answers to the final half-step multiplier instead.
struct PmpResidual {
  double adjoint = 0.0;
  double stationarity = 0.0;
};

PmpResidual pmp_residual(const LinearSystem& sys, const StageCost& cost, const Trajectory& traj);

// Finite-horizon optimal control by trapezoidal transcription: minimise the
// trapezoid cost over discrete trajectories satisfying the trapezoid dynamics
// with x(0) = x0 and free terminal state. The stationarity system is solved by
// damped Newton; each step factorises the banded KKT matrix (interleaved
// unknowns, bandwidth 2n + m). One iteration is exact for quadratic costs.
Trajectory solve_lc(const LinearSystem& sys, const StageCost& cost, const Eigen::VectorXd& x0,
                    const Grid& grid, const NewtonOptions& opts = {});

// Independent LQ reference: backward Riccati sweep (matrix, affine and scalar
// terms) integrated by RK4 on half-steps, then a forward closed-loop RK4 sweep
// under u = -R^{-1}[(S' + B'P)x + r + B's]. The trajectory's cost field is the
// same trapezoid quadrature used by solve_lc; predicted_cost is the value
// function at (0, x0) from the sweep itself.
struct RiccatiSolution {
  Trajectory trajectory;
  double predicted_cost = 0.0;
};

RiccatiSolution riccati_lq_oracle(const LinearSystem& sys, const QuadraticCost& cost,
                                  const Eigen::VectorXd& x0, const Grid& grid);

// Feedback gain F (m x k) with Re(eig(A11 + B1 F)) <= -decay, built from the
// anti-stable Lyapunov solution W of (A11 + bI)W + W(A11 + bI)' = 2 B1 B1',
// F = -B1'W^{-1}. Requires a controllable pair; throws SolverError if no
// shift in the retry schedule verifies. k = 0 yields an m x 0 gain.
Eigen::MatrixXd stabilizing_feedback(const Eigen::MatrixXd& A11, const Eigen::MatrixXd& B1,
                                     double decay);

// RK4 sweep of the closed loop u = u* + F P1'(x - x*) from x0. The costate
// columns are left zero (the run is suboptimal; no multiplier is defined).
Trajectory suboptimal_feedback_run(const LinearSystem& sys, const StageCost& cost,
                                   const KalmanDecomposition& dec, const SteadyPair& steady,
                                   const Eigen::MatrixXd& F, const Eigen::VectorXd& x0,
                                   const Grid& grid);

}  // namespace turnpike
