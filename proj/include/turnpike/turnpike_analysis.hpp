#pragma once

#include <Eigen/Dense>
#include <vector>

#include "turnpike/finite_horizon.hpp"
#include "turnpike/kalman.hpp"
#include "turnpike/linear_system.hpp"
#include "turnpike/stage_cost.hpp"
#include "turnpike/steady_pair.hpp"

namespace turnpike {

// Node-wise distances of a trajectory from an anchored optimum.
struct DeviationSeries {
  Eigen::VectorXd t;
  Eigen::VectorXd state;     // |x_i - x*|
  Eigen::VectorXd control;   // |u_i - u*|
  Eigen::VectorXd combined;  // sqrt(state^2 + control^2)
};

DeviationSeries deviation_series(const Trajectory& traj, const SteadyPair& steady);

struct EnvelopeOptions {
  double window_frac = 0.1;  // entry window starts at max(1, frac * T)
  double floor = 1e-12;      // nodes at or below this deviation are ignored
  int min_nodes = 20;        // per usable side
};

// Least-squares fit of log(deviation) against time over an entry window
// [max(1, frac T), T/2] and the mirrored exit window in T - t. A side with
// fewer than min_nodes deviations above the floor is dropped (stabilised
// trajectories sit at numerical noise on the exit side); if both sides drop,
// SolverError. With both sides present: rate of smaller magnitude (sign
// kept), largest amplitude, worst r^2.
struct EnvelopeFit {
  double rate = 0.0;       // lambda in K [e^{-lambda t} + e^{-lambda (T-t)}]
  double amplitude = 0.0;  // K
  double r2 = 0.0;
  double entry_slope = 0.0, exit_slope = 0.0;
  int entry_nodes = 0, exit_nodes = 0;  // zero when the side was dropped
};

EnvelopeFit fit_envelope(const DeviationSeries& dev, const Grid& grid,
                         const EnvelopeOptions& opts = {});

struct SweepOptions {
  int N_per_unit = 100;      // grid density: N = ceil(N_per_unit * T)
  double min_rate = 0.01;    // per-horizon pass thresholds
  double min_r2 = 0.9;
  bool keep_trajectories = false;  // retain solved trajectories in the result
  EnvelopeOptions envelope;
  NewtonOptions newton;
};

struct HorizonRecord {
  double T = 0.0;
  int N = 0;
  double value = 0.0;          // V_T(x0)
  double gap = 0.0;            // V_T(x0) - T V*
  double mid_state_dev = 0.0;  // deviations at the midpoint node
  double mid_control_dev = 0.0;
  double integral_metric = 0.0;  // (1/T) trapezoid of state^2 + control^2 deviations
  EnvelopeFit fit;
  bool passes = false;
};

struct SweepResult {
  std::vector<HorizonRecord> records;
  std::vector<Trajectory> trajectories;  // filled only when keep_trajectories is set
  double value_slope = 0.0;  // least-squares slope of V_T against T
  bool confirmed = false;    // every horizon passed the rate / r^2 thresholds
};

// Solves the finite-horizon problem for each requested horizon and collects
// the exponential-envelope and value-gap evidence against the given anchored
// optimum. The steady pair is taken as-is: for an infeasible initial state the
// caller passes the projected reference and the fits are expected to refute
// the envelope.
SweepResult value_gap_sweep(const LinearSystem& sys, const StageCost& cost,
                            const SteadyPair& steady, const Eigen::VectorXd& x0,
                            const std::vector<double>& horizons, const SweepOptions& opts = {});

// Relative defect of the integrated excess-cost identity between nodes i1 and
// i2: the running cost above its static value, corrected by the anchor
// multiplier term, must equal the controllable-costate boundary term plus the
// integrated second-order remainder around the optimum (assembled with a
// 16-point Gauss-Legendre rule in the Taylor parameter).
double excess_cost_identity_residual(const LinearSystem& sys, const KalmanDecomposition& dec,
                                     const StageCost& cost, const SteadyPair& steady,
                                     const Trajectory& traj, int i1, int i2);

// Certified constant for recovering the state norm at the window edge from
// the observed output and forcing energies on a window of length alpha:
//   |x(t)|^2 <= K [ int |C x|^2 + int |f|^2 ]
// for solutions of x' = A x + f, with the window extending forward from t
// (or backward when forward = false). Simpson quadrature for the Gramian;
// sampled sup-norms carry a 1% safety factor.
struct ObservabilityBound {
  Eigen::MatrixXd gramian;
  double K = 0.0;
  double m1 = 0.0;  // sup_r |e^{rA'} C'|_F over the window (reversed flow if backward)
  double m2 = 0.0;  // sup_r |C e^{rA}|_F
};

ObservabilityBound observability_bound(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C,
                                       double alpha, bool forward, int quad_intervals = 512);

// One randomized verification run: simulates x' = Ax + f with a smooth random
// forcing, measures both window energies around an interior time and returns
// the ratios |x(t)|^2 / (K * energy), which the bound promises to keep <= 1.
struct ObservabilityTrial {
  double forward_ratio = 0.0;
  double backward_ratio = 0.0;
};

ObservabilityTrial observability_trial(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C,
                                       double alpha, std::uint64_t seed);

}  // namespace turnpike
