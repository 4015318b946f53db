#include "turnpike/finite_horizon.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include "detail/lapack.hpp"
#include "turnpike/errors.hpp"

namespace turnpike {

namespace {

// Interleaved unknown layout: u_0 first, then per interval i the triple
// (lambda_i, x_{i+1}, u_{i+1}). Every KKT coupling then stays within
// bandwidth 2n + m.
struct Layout {
  int n, m, N;

  int stride() const { return 2 * n + m; }
  int size() const { return m + N * stride(); }
  int u(int i) const { return i == 0 ? 0 : m + (i - 1) * stride() + 2 * n; }
  int lam(int i) const { return m + i * stride(); }
  int x(int i) const { return m + (i - 1) * stride() + n; }  // i >= 1
};

struct Transcription {
  const LinearSystem& sys;
  const StageCost& cost;
  const Eigen::VectorXd& x0;
  Grid grid;
  Layout lay;

  Eigen::VectorXd state(const Eigen::VectorXd& z, int i) const {
    return i == 0 ? x0 : Eigen::VectorXd(z.segment(lay.x(i), lay.n));
  }

  Eigen::VectorXd residual(const Eigen::VectorXd& z) const {
    const int n = lay.n, m = lay.m, N = lay.N;
    const double h = grid.h();
    Eigen::VectorXd r(lay.size());

    Eigen::VectorXd X_prev = x0;
    Eigen::VectorXd u_prev = z.segment(lay.u(0), m);
    Eigen::VectorXd g_prev = cost.grad(X_prev, u_prev);
    Eigen::VectorXd F_prev = sys.A * X_prev + sys.B * u_prev + sys.b;

    // Stationarity at node 0 (x_0 is fixed, so only the control row exists).
    r.segment(lay.u(0), m) =
        0.5 * h * g_prev.tail(m) - 0.5 * h * sys.B.transpose() * z.segment(lay.lam(0), n);

    for (int i = 1; i <= N; ++i) {
      const Eigen::VectorXd X = z.segment(lay.x(i), n);
      const Eigen::VectorXd u = z.segment(lay.u(i), m);
      const Eigen::VectorXd g = cost.grad(X, u);
      const Eigen::VectorXd F = sys.A * X + sys.B * u + sys.b;
      const Eigen::VectorXd lam_prev = z.segment(lay.lam(i - 1), n);
      const double w = (i == N) ? 0.5 : 1.0;

      Eigen::VectorXd rx = w * h * g.head(n) + lam_prev - 0.5 * h * sys.A.transpose() * lam_prev;
      Eigen::VectorXd ru = w * h * g.tail(m) - 0.5 * h * sys.B.transpose() * lam_prev;
      if (i < N) {
        const Eigen::VectorXd lam = z.segment(lay.lam(i), n);
        rx -= lam + 0.5 * h * sys.A.transpose() * lam;
        ru -= 0.5 * h * sys.B.transpose() * lam;
      }
      r.segment(lay.x(i), n) = rx;
      r.segment(lay.u(i), m) = ru;
      r.segment(lay.lam(i - 1), n) = X - X_prev - 0.5 * h * (F_prev + F);

      X_prev = X;
      F_prev = F;
    }
    return r;
  }

  void jacobian(const Eigen::VectorXd& z, detail::BandedMatrix& J) const {
    const int n = lay.n, m = lay.m, N = lay.N;
    const double h = grid.h();
    J.reset();

    const Eigen::MatrixXd Ep = Eigen::MatrixXd::Identity(n, n) - 0.5 * h * sys.A;
    const Eigen::MatrixXd Em = -Eigen::MatrixXd::Identity(n, n) - 0.5 * h * sys.A;
    const Eigen::MatrixXd G = -0.5 * h * sys.B;

    for (int i = 0; i <= N; ++i) {
      const Eigen::VectorXd X = state(z, i);
      const Eigen::VectorXd u = z.segment(lay.u(i), m);
      const Eigen::MatrixXd H = cost.hess(X, u);
      const double w = (i == 0 || i == N) ? 0.5 : 1.0;

      J.add_block(lay.u(i), lay.u(i), w * h * H.bottomRightCorner(m, m));
      if (i >= 1) {
        J.add_block(lay.x(i), lay.x(i), w * h * H.topLeftCorner(n, n));
        J.add_block(lay.x(i), lay.u(i), w * h * H.topRightCorner(n, m));
        J.add_block(lay.u(i), lay.x(i), w * h * H.bottomLeftCorner(m, n));
      }

      // Constraint couplings, symmetric across the diagonal.
      if (i < N) {
        J.add_block(lay.lam(i), lay.u(i), G);
        J.add_block(lay.u(i), lay.lam(i), G.transpose());
        J.add_block(lay.lam(i), lay.x(i + 1), Ep);
        J.add_block(lay.x(i + 1), lay.lam(i), Ep.transpose());
        J.add_block(lay.lam(i), lay.u(i + 1), G);
        J.add_block(lay.u(i + 1), lay.lam(i), G.transpose());
        if (i >= 1) {
          J.add_block(lay.lam(i), lay.x(i), Em);
          J.add_block(lay.x(i), lay.lam(i), Em.transpose());
        }
      }
    }
  }
};

// vec form of W -> MW + WM' (column-major vec).
Eigen::MatrixXd lyapunov_operator(const Eigen::MatrixXd& M) {
  const int k = static_cast<int>(M.rows());
  Eigen::MatrixXd op = Eigen::MatrixXd::Zero(k * k, k * k);
  for (int j = 0; j < k; ++j) op.block(j * k, j * k, k, k) += M;
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < k; ++i) op.block(i * k, j * k, k, k).diagonal().array() += M(i, j);
  return op;
}

}  // namespace

Grid Grid::make(double T, int N) {
  if (!(T > 0.0) || !std::isfinite(T)) throw ConfigError("horizon must be positive and finite");
  if (N < 2) throw ConfigError("grid needs at least 2 intervals");
  return Grid{T, N};
}

double trapezoid_cost(const StageCost& cost, const Trajectory& traj) {
  const int N = traj.grid.N;
  const double h = traj.grid.h();
  double sum = 0.0;
  for (int i = 0; i <= N; ++i) {
    const double w = (i == 0 || i == N) ? 0.5 : 1.0;
    sum += w * cost.eval(traj.x.col(i), traj.u.col(i));
  }
  return h * sum;
}

double trapezoid_dynamics_residual(const LinearSystem& sys, const Trajectory& traj) {
  const int N = traj.grid.N;
  const double h = traj.grid.h();
  double worst = 0.0;
  Eigen::VectorXd F_prev = sys.A * traj.x.col(0) + sys.B * traj.u.col(0) + sys.b;
  for (int i = 0; i < N; ++i) {
    const Eigen::VectorXd F_next = sys.A * traj.x.col(i + 1) + sys.B * traj.u.col(i + 1) + sys.b;
    const double num =
        (traj.x.col(i + 1) - traj.x.col(i) - 0.5 * h * (F_prev + F_next)).norm();
    worst = std::max(worst, num / (1.0 + traj.x.col(i).norm()));
    F_prev = F_next;
  }
  return worst;
}

PmpResidual pmp_residual(const LinearSystem& sys, const StageCost& cost, const Trajectory& traj) {
  const int n = sys.n();
  const int N = traj.grid.N;
  const double h = traj.grid.h();

  PmpResidual out;
  Eigen::MatrixXd G(n, N + 1);
  for (int i = 0; i <= N; ++i) {
    const Eigen::VectorXd g = cost.grad(traj.x.col(i), traj.u.col(i));
    G.col(i) = sys.A.transpose() * traj.psi.col(i) + g.head(n);
    // The terminal node is skipped: psi(T) is pinned to zero there while the
    // transcribed control is tied to the last half-step multiplier, a
    // convention gap of O(h) that says nothing about optimality.
    if (i == N) continue;
    const double st = (sys.B.transpose() * traj.psi.col(i) + g.tail(sys.m())).norm();
    out.stationarity = std::max(out.stationarity, st);
  }
  for (int i = 1; i + 2 <= N; ++i) {
    const Eigen::VectorXd d =
        traj.psi.col(i + 1) - traj.psi.col(i) + 0.5 * h * (G.col(i) + G.col(i + 1));
    out.adjoint = std::max(out.adjoint, d.norm() / h);
  }
  return out;
}

Trajectory solve_lc(const LinearSystem& sys, const StageCost& cost, const Eigen::VectorXd& x0,
                    const Grid& grid, const NewtonOptions& opts) {
  const int n = sys.n(), m = sys.m(), N = grid.N;
  if (cost.state_dim() != n || cost.control_dim() != m)
    throw ConfigError("stage cost dimensions do not match the system");
  if (x0.size() != n) throw ConfigError("initial state dimension mismatch");
  if (grid.N < 2) throw ConfigError("grid needs at least 2 intervals");

  const Layout lay{n, m, N};
  Transcription tr{sys, cost, x0, grid, lay};

  Eigen::VectorXd z = Eigen::VectorXd::Zero(lay.size());
  for (int i = 1; i <= N; ++i) z.segment(lay.x(i), n) = x0;

  detail::BandedMatrix J(lay.size(), lay.stride(), lay.stride());

  Eigen::VectorXd F = tr.residual(z);
  double merit = F.squaredNorm();
  int iter = 0;
  for (; iter < opts.max_iter; ++iter) {
    if (F.lpNorm<Eigen::Infinity>() <= opts.tol) break;

    tr.jacobian(z, J);
    const Eigen::VectorXd step = J.solve(-F);

    double t = 1.0;
    bool accepted = false;
    while (t >= 0x1p-30) {
      const Eigen::VectorXd z_try = z + t * step;
      const Eigen::VectorXd F_try = tr.residual(z_try);
      const double m_try = F_try.squaredNorm();
      if (m_try <= (1.0 - 2.0 * opts.armijo_slope * t) * merit) {
        z = z_try;
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
    os << "transcription Newton did not reach " << opts.tol << " in " << opts.max_iter
       << " iterations (residual " << F.lpNorm<Eigen::Infinity>() << ")";
    throw SolverError(os.str());
  }

  Trajectory traj;
  traj.grid = grid;
  traj.x.resize(n, N + 1);
  traj.u.resize(m, N + 1);
  traj.psi.resize(n, N + 1);
  traj.x.col(0) = x0;
  for (int i = 1; i <= N; ++i) traj.x.col(i) = z.segment(lay.x(i), n);
  for (int i = 0; i <= N; ++i) traj.u.col(i) = z.segment(lay.u(i), m);

  // lambda_i approximates the continuous costate at the interval midpoint (up
  // to sign), so nodes take the average of the two adjacent multipliers. Node 0
  // keeps -lambda_0 (this preserves exact stationarity there); the terminal
  // condition psi(T) = 0 is exact.
  traj.psi.col(0) = -z.segment(lay.lam(0), n);
  for (int i = 1; i < N; ++i)
    traj.psi.col(i) = -0.5 * (z.segment(lay.lam(i - 1), n) + z.segment(lay.lam(i), n));
  traj.psi.col(N).setZero();

  traj.cost = trapezoid_cost(cost, traj);
  traj.newton_iters = iter;
  return traj;
}

RiccatiSolution riccati_lq_oracle(const LinearSystem& sys, const QuadraticCost& cost,
                                  const Eigen::VectorXd& x0, const Grid& grid) {
  const int n = sys.n(), m = sys.m(), N = grid.N;
  if (cost.state_dim() != n || cost.control_dim() != m)
    throw ConfigError("stage cost dimensions do not match the system");
  if (x0.size() != n) throw ConfigError("initial state dimension mismatch");

  const Eigen::MatrixXd& A = sys.A;
  const Eigen::MatrixXd& B = sys.B;
  const Eigen::VectorXd& b = sys.b;
  const Eigen::MatrixXd& Q = cost.Q();
  const Eigen::MatrixXd& S = cost.S();
  const Eigen::VectorXd& q = cost.q();
  const Eigen::VectorXd& r = cost.r();

  const Eigen::LDLT<Eigen::MatrixXd> Rf(cost.R());
  if (Rf.info() != Eigen::Success || !Rf.isPositive())
    throw SolverError("control weight is not positive definite");

  // Forward-time derivatives of the value-function coefficients; the sweep
  // integrates them backwards from P(T) = 0, s(T) = 0, kappa(T) = 0.
  const auto dP = [&](const Eigen::MatrixXd& P) -> Eigen::MatrixXd {
    const Eigen::MatrixXd K = S + P * B;
    return -Q - P * A - A.transpose() * P + K * Rf.solve(K.transpose());
  };
  const auto ds = [&](const Eigen::MatrixXd& P, const Eigen::VectorXd& s) -> Eigen::VectorXd {
    const Eigen::MatrixXd K = S + P * B;
    return -q - P * b - A.transpose() * s + K * Rf.solve(r + B.transpose() * s);
  };
  const auto dkappa = [&](const Eigen::VectorXd& s) -> double {
    const Eigen::VectorXd g = r + B.transpose() * s;
    return -cost.c0() - s.dot(b) + 0.5 * g.dot(Rf.solve(g));
  };

  const double h = grid.h();
  const double hh = 0.5 * h;  // sweep step: two per grid interval
  std::vector<Eigen::MatrixXd> P(2 * N + 1);
  std::vector<Eigen::VectorXd> s(2 * N + 1);
  std::vector<double> kappa(2 * N + 1);
  P[2 * N] = Eigen::MatrixXd::Zero(n, n);
  s[2 * N] = Eigen::VectorXd::Zero(n);
  kappa[2 * N] = 0.0;
  for (int j = 2 * N; j > 0; --j) {
    const Eigen::MatrixXd kP1 = dP(P[j]);
    const Eigen::VectorXd ks1 = ds(P[j], s[j]);
    const double kk1 = dkappa(s[j]);
    const Eigen::MatrixXd kP2 = dP(P[j] - hh * 0.5 * kP1);
    const Eigen::VectorXd ks2 = ds(P[j] - hh * 0.5 * kP1, s[j] - hh * 0.5 * ks1);
    const double kk2 = dkappa(s[j] - hh * 0.5 * ks1);
    const Eigen::MatrixXd kP3 = dP(P[j] - hh * 0.5 * kP2);
    const Eigen::VectorXd ks3 = ds(P[j] - hh * 0.5 * kP2, s[j] - hh * 0.5 * ks2);
    const double kk3 = dkappa(s[j] - hh * 0.5 * ks2);
    const Eigen::MatrixXd kP4 = dP(P[j] - hh * kP3);
    const Eigen::VectorXd ks4 = ds(P[j] - hh * kP3, s[j] - hh * ks3);
    const double kk4 = dkappa(s[j] - hh * ks3);
    P[j - 1] = P[j] - (hh / 6.0) * (kP1 + 2.0 * kP2 + 2.0 * kP3 + kP4);
    P[j - 1] = 0.5 * (P[j - 1] + P[j - 1].transpose());
    s[j - 1] = s[j] - (hh / 6.0) * (ks1 + 2.0 * ks2 + 2.0 * ks3 + ks4);
    kappa[j - 1] = kappa[j] - (hh / 6.0) * (kk1 + 2.0 * kk2 + 2.0 * kk3 + kk4);
  }

  const auto feedback = [&](int j, const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return -Rf.solve((S.transpose() + B.transpose() * P[j]) * x + r + B.transpose() * s[j]);
  };
  const auto flow = [&](int j, const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return A * x + B * feedback(j, x) + b;
  };

  Trajectory traj;
  traj.grid = grid;
  traj.x.resize(n, N + 1);
  traj.u.resize(m, N + 1);
  traj.psi.resize(n, N + 1);
  traj.x.col(0) = x0;
  for (int i = 0; i < N; ++i) {
    const Eigen::VectorXd& x = traj.x.col(i);
    const Eigen::VectorXd k1 = flow(2 * i, x);
    const Eigen::VectorXd k2 = flow(2 * i + 1, x + 0.5 * h * k1);
    const Eigen::VectorXd k3 = flow(2 * i + 1, x + 0.5 * h * k2);
    const Eigen::VectorXd k4 = flow(2 * i + 2, x + h * k3);
    traj.x.col(i + 1) = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  for (int i = 0; i <= N; ++i) {
    traj.u.col(i) = feedback(2 * i, traj.x.col(i));
    traj.psi.col(i) = P[2 * i] * traj.x.col(i) + s[2 * i];
  }
  traj.cost = trapezoid_cost(cost, traj);

  RiccatiSolution out;
  out.trajectory = std::move(traj);
  out.predicted_cost = 0.5 * x0.dot(P[0] * x0) + s[0].dot(x0) + kappa[0];
  return out;
}

Eigen::MatrixXd stabilizing_feedback(const Eigen::MatrixXd& A11, const Eigen::MatrixXd& B1,
                                     double decay) {
  const int k = static_cast<int>(A11.rows());
  const int m = static_cast<int>(B1.cols());
  if (A11.cols() != k || B1.rows() != k) throw ConfigError("controllable block shapes disagree");
  if (!(decay > 0.0)) throw ConfigError("decay rate must be positive");
  if (k == 0) return Eigen::MatrixXd::Zero(m, 0);

  double spread = 0.0;
  {
    const Eigen::EigenSolver<Eigen::MatrixXd> es(A11);
    for (int i = 0; i < k; ++i) spread = std::max(spread, std::abs(es.eigenvalues()(i).real()));
  }

  // Shift so A11 + beta I is anti-stable; then the Lyapunov solution W of
  // (A11 + bI)W + W(A11 + bI)' = 2 B1 B1' is positive definite for a
  // controllable pair and F = -B1'W^{-1} places every closed-loop eigenvalue
  // exactly at real part -beta.
  double beta = decay + 1.0 + spread;
  for (int attempt = 0; attempt < 10; ++attempt, beta *= 2.0) {
    const Eigen::MatrixXd M = A11 + beta * Eigen::MatrixXd::Identity(k, k);
    const Eigen::MatrixXd lhs = lyapunov_operator(M);
    const Eigen::MatrixXd rhs_mat = 2.0 * B1 * B1.transpose();
    const Eigen::Map<const Eigen::VectorXd> rhs(rhs_mat.data(), k * k);

    const Eigen::FullPivLU<Eigen::MatrixXd> lu(lhs);
    if (!lu.isInvertible()) continue;
    const Eigen::VectorXd wvec = lu.solve(rhs);
    Eigen::MatrixXd W = Eigen::Map<const Eigen::MatrixXd>(wvec.data(), k, k);
    W = 0.5 * (W + W.transpose()).eval();

    const Eigen::LDLT<Eigen::MatrixXd> Wf(W);
    if (Wf.info() != Eigen::Success || !Wf.isPositive()) continue;
    const Eigen::MatrixXd F = -Wf.solve(B1).transpose();

    const Eigen::EigenSolver<Eigen::MatrixXd> es(A11 + B1 * F);
    if (es.eigenvalues().real().maxCoeff() <= -decay) return F;
  }
  std::ostringstream os;
  os << "feedback synthesis failed to reach decay rate " << decay
     << ": pair is numerically uncontrollable";
  throw SolverError(os.str());
}

Trajectory suboptimal_feedback_run(const LinearSystem& sys, const StageCost& cost,
                                   const KalmanDecomposition& dec, const SteadyPair& steady,
                                   const Eigen::MatrixXd& F, const Eigen::VectorXd& x0,
                                   const Grid& grid) {
  const int n = sys.n(), m = sys.m(), N = grid.N;
  if (x0.size() != n) throw ConfigError("initial state dimension mismatch");
  if (F.rows() != m || F.cols() != dec.k) throw ConfigError("feedback gain shape mismatch");

  const auto control = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return steady.u_star + F * (dec.P1.transpose() * (x - steady.x_star));
  };
  const auto flow = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return sys.A * x + sys.B * control(x) + sys.b;
  };

  const double h = grid.h();
  Trajectory traj;
  traj.grid = grid;
  traj.x.resize(n, N + 1);
  traj.u.resize(m, N + 1);
  traj.psi = Eigen::MatrixXd::Zero(n, N + 1);
  traj.x.col(0) = x0;
  for (int i = 0; i < N; ++i) {
    const Eigen::VectorXd& x = traj.x.col(i);
    const Eigen::VectorXd k1 = flow(x);
    const Eigen::VectorXd k2 = flow(x + 0.5 * h * k1);
    const Eigen::VectorXd k3 = flow(x + 0.5 * h * k2);
    const Eigen::VectorXd k4 = flow(x + h * k3);
    traj.x.col(i + 1) = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  for (int i = 0; i <= N; ++i) traj.u.col(i) = control(traj.x.col(i));
  traj.cost = trapezoid_cost(cost, traj);
  return traj;
}

}  // namespace turnpike
