#include <cmath>
#include <sstream>

#include "detail/rng.hpp"
#include "turnpike/linear_system.hpp"
#include "turnpike/stage_cost.hpp"

namespace turnpike {

namespace {

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

void require_symmetric(const Eigen::MatrixXd& m, const char* name) {
  const double tol = 1e-12 * (1.0 + m.norm());
  if ((m - m.transpose()).norm() > tol) {
    std::ostringstream os;
    os << "cost matrix " << name << " is not symmetric";
    throw ConfigError(os.str());
  }
}

}  // namespace

LinearSystem LinearSystem::make(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::VectorXd b) {
  if (A.rows() != A.cols()) throw ConfigError("system.A must be square");
  if (B.rows() != A.rows()) throw ConfigError("system.B row count must match system.A");
  if (b.size() != A.rows()) throw ConfigError("system.b length must match system.A");
  if (B.cols() < 1) throw ConfigError("system.B needs at least one column");
  if (!all_finite(A) || !all_finite(B) || !all_finite(b))
    throw ConfigError("system matrices must be finite");
  return LinearSystem{std::move(A), std::move(B), std::move(b)};
}

void StageCost::require_dims(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
  if (x.size() != state_dim() || u.size() != control_dim()) {
    std::ostringstream os;
    os << "cost argument dimensions (" << x.size() << ", " << u.size() << ") do not match ("
       << state_dim() << ", " << control_dim() << ")";
    throw ConfigError(os.str());
  }
}

QuadraticCost::QuadraticCost(Eigen::MatrixXd Q, Eigen::MatrixXd S, Eigen::MatrixXd R,
                             Eigen::VectorXd q, Eigen::VectorXd r, double c0,
                             std::optional<double> declared_modulus)
    : Q_(std::move(Q)), S_(std::move(S)), R_(std::move(R)), q_(std::move(q)), r_(std::move(r)), c0_(c0) {
  if (Q_.rows() != Q_.cols()) throw ConfigError("cost.Q must be square");
  if (R_.rows() != R_.cols()) throw ConfigError("cost.R must be square");
  if (S_.rows() != Q_.rows() || S_.cols() != R_.rows())
    throw ConfigError("cost.S must be state_dim x control_dim");
  if (q_.size() != Q_.rows()) throw ConfigError("cost.q length must match cost.Q");
  if (r_.size() != R_.rows()) throw ConfigError("cost.r length must match cost.R");
  if (!Q_.allFinite() || !S_.allFinite() || !R_.allFinite() || !q_.allFinite() || !r_.allFinite() ||
      !std::isfinite(c0_))
    throw ConfigError("cost matrices must be finite");
  require_symmetric(Q_, "Q");
  require_symmetric(R_, "R");
  if (declared_modulus) {
    if (!(*declared_modulus > 0.0)) throw ConfigError("cost.delta must be positive");
    modulus_ = *declared_modulus;
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(stacked_hessian());
    modulus_ = es.eigenvalues().minCoeff();
    if (!(modulus_ > 0.0))
      throw ConfigError("stacked cost Hessian is not positive definite; declare cost.delta explicitly");
  }
}

double QuadraticCost::eval(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
  require_dims(x, u);
  return 0.5 * x.dot(Q_ * x) + x.dot(S_ * u) + 0.5 * u.dot(R_ * u) + q_.dot(x) + r_.dot(u) + c0_;
}

Eigen::VectorXd QuadraticCost::grad(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
  require_dims(x, u);
  Eigen::VectorXd g(x.size() + u.size());
  g.head(x.size()) = Q_ * x + S_ * u + q_;
  g.tail(u.size()) = S_.transpose() * x + R_ * u + r_;
  return g;
}

Eigen::MatrixXd QuadraticCost::hess(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
  require_dims(x, u);
  return stacked_hessian();
}

Eigen::MatrixXd QuadraticCost::stacked_hessian() const {
  const auto n = Q_.rows();
  const auto m = R_.rows();
  Eigen::MatrixXd H(n + m, n + m);
  H.topLeftCorner(n, n) = Q_;
  H.topRightCorner(n, m) = S_;
  H.bottomLeftCorner(m, n) = S_.transpose();
  H.bottomRightCorner(m, m) = R_;
  return H;
}

std::optional<double> QuadraticCost::cross_gain_bound(double /*radius*/) const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(R_);
  const double rmin = es.eigenvalues().minCoeff();
  if (!(rmin > 0.0)) return std::nullopt;
  return S_.norm() / rmin;
}

std::unique_ptr<StageCost> QuadraticCost::clone() const {
  return std::make_unique<QuadraticCost>(*this);
}

double log_cosh(double s) {
  const double a = std::abs(s);
  return a + std::log1p(std::exp(-2.0 * a)) - M_LN2;
}

namespace {

double sech2(double s) {
  const double t = std::tanh(s);
  return 1.0 - t * t;
}

}  // namespace

PerturbedQuadraticCost::PerturbedQuadraticCost(QuadraticCost base, Eigen::VectorXd alpha,
                                               Eigen::VectorXd beta)
    : base_(std::move(base)), alpha_(std::move(alpha)), beta_(std::move(beta)) {
  if (alpha_.size() != base_.state_dim()) throw ConfigError("cost.alpha length must match state_dim");
  if (beta_.size() != base_.control_dim()) throw ConfigError("cost.beta length must match control_dim");
  if (!alpha_.allFinite() || !beta_.allFinite()) throw ConfigError("cost coefficients must be finite");
  if (alpha_.minCoeff() < 0.0 || beta_.minCoeff() < 0.0)
    throw ConfigError("cost.alpha and cost.beta must be nonnegative");
}

double PerturbedQuadraticCost::eval(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
  double v = base_.eval(x, u);
  for (int i = 0; i < x.size(); ++i) v += alpha_(i) * log_cosh(x(i));
  for (int j = 0; j < u.size(); ++j) v += beta_(j) * log_cosh(u(j));
  return v;
}

Eigen::VectorXd PerturbedQuadraticCost::grad(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
  Eigen::VectorXd g = base_.grad(x, u);
  for (int i = 0; i < x.size(); ++i) g(i) += alpha_(i) * std::tanh(x(i));
  for (int j = 0; j < u.size(); ++j) g(x.size() + j) += beta_(j) * std::tanh(u(j));
  return g;
}

Eigen::MatrixXd PerturbedQuadraticCost::hess(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
  Eigen::MatrixXd H = base_.hess(x, u);
  for (int i = 0; i < x.size(); ++i) H(i, i) += alpha_(i) * sech2(x(i));
  for (int j = 0; j < u.size(); ++j) H(x.size() + j, x.size() + j) += beta_(j) * sech2(u(j));
  return H;
}

std::unique_ptr<StageCost> PerturbedQuadraticCost::clone() const {
  return std::make_unique<PerturbedQuadraticCost>(*this);
}

PredicateCheck check_strong_convexity(const StageCost& cost,
                                      const Eigen::VectorXd& x_lo, const Eigen::VectorXd& x_hi,
                                      const Eigen::VectorXd& u_lo, const Eigen::VectorXd& u_hi,
                                      int n_samples, std::uint64_t seed) {
  const int n = cost.state_dim();
  const int m = cost.control_dim();
  if (x_lo.size() != n || x_hi.size() != n || u_lo.size() != m || u_hi.size() != m)
    throw ConfigError("sampling box dimensions do not match the cost");
  if (n_samples < 1) throw ConfigError("n_samples must be >= 1");

  detail::Rng rng(seed);
  double min_eig = std::numeric_limits<double>::infinity();
  Eigen::VectorXd x(n), u(m);
  for (int s = 0; s < n_samples; ++s) {
    for (int i = 0; i < n; ++i) x(i) = rng.uniform(x_lo(i), x_hi(i));
    for (int j = 0; j < m; ++j) u(j) = rng.uniform(u_lo(j), u_hi(j));
    Eigen::MatrixXd H = cost.hess(x, u);
    H = 0.5 * (H + H.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Eigen::EigenvaluesOnly);
    min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
  }
  return PredicateCheck{min_eig >= cost.convexity_modulus() - 1e-10, min_eig};
}

PredicateCheck check_cross_gain(const StageCost& cost, double radius, double control_radius,
                                int n_samples, std::uint64_t seed) {
  if (!(radius > 0.0) || !(control_radius > 0.0)) throw ConfigError("sampling radii must be positive");
  if (n_samples < 1) throw ConfigError("n_samples must be >= 1");
  const int n = cost.state_dim();
  const int m = cost.control_dim();

  detail::Rng rng(seed);
  double sup_ratio = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    const Eigen::VectorXd x = rng.ball_vector(n, radius);
    const Eigen::VectorXd u = rng.ball_vector(m, control_radius);
    const Eigen::MatrixXd H = cost.hess(x, u);
    const Eigen::MatrixXd f_xu = H.topRightCorner(n, m);
    const Eigen::MatrixXd f_uu = H.bottomRightCorner(m, m);
    const Eigen::MatrixXd ratio = f_uu.ldlt().solve(f_xu.transpose()).transpose();
    sup_ratio = std::max(sup_ratio, ratio.norm());
  }
  const auto bound = cost.cross_gain_bound(radius);
  const bool holds = bound.has_value() && sup_ratio <= *bound + 1e-10;
  return PredicateCheck{holds, sup_ratio};
}

}  // namespace turnpike
