#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>

namespace turnpike {

// Running cost f(x, u): C^2 and strongly convex in the stacked variable (x; u).
//
// The convexity modulus and the cross-gain bound are *declared* by the concrete
// family; check_strong_convexity / check_cross_gain verify them by sampling
// instead of trusting the declaration.
class StageCost {
 public:
  virtual ~StageCost() = default;

  virtual int state_dim() const = 0;
  virtual int control_dim() const = 0;

  virtual double eval(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const = 0;
  // Gradient and Hessian with respect to the stacked variable (x; u).
  virtual Eigen::VectorXd grad(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const = 0;
  virtual Eigen::MatrixXd hess(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const = 0;

  // Declared lower bound on the Hessian spectrum (delta > 0).
  virtual double convexity_modulus() const = 0;

  // Declared bound for |f_xu f_uu^{-1}|_F on {|x| <= radius} x R^m, if any.
  virtual std::optional<double> cross_gain_bound(double radius) const {
    (void)radius;
    return std::nullopt;
  }

  virtual std::unique_ptr<StageCost> clone() const = 0;

 protected:
  void require_dims(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;
};

// f(x, u) = 1/2 x'Qx + x'Su + 1/2 u'Ru + q'x + r'u + c0.
class QuadraticCost final : public StageCost {
 public:
  // Omitting declared_modulus computes the smallest eigenvalue of the stacked
  // Hessian and requires it to be positive. A declared value is recorded as-is
  // (so a mis-declared or indefinite cost is constructible and left for
  // check_strong_convexity to reject).
  QuadraticCost(Eigen::MatrixXd Q, Eigen::MatrixXd S, Eigen::MatrixXd R,
                Eigen::VectorXd q, Eigen::VectorXd r, double c0,
                std::optional<double> declared_modulus = std::nullopt);

  int state_dim() const override { return static_cast<int>(Q_.rows()); }
  int control_dim() const override { return static_cast<int>(R_.rows()); }

  double eval(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const override;
  Eigen::VectorXd grad(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const override;
  Eigen::MatrixXd hess(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const override;

  double convexity_modulus() const override { return modulus_; }
  std::optional<double> cross_gain_bound(double radius) const override;

  std::unique_ptr<StageCost> clone() const override;

  const Eigen::MatrixXd& Q() const { return Q_; }
  const Eigen::MatrixXd& S() const { return S_; }
  const Eigen::MatrixXd& R() const { return R_; }
  const Eigen::VectorXd& q() const { return q_; }
  const Eigen::VectorXd& r() const { return r_; }
  double c0() const { return c0_; }

  Eigen::MatrixXd stacked_hessian() const;

 private:
  Eigen::MatrixXd Q_, S_, R_;
  Eigen::VectorXd q_, r_;
  double c0_ = 0.0;
  double modulus_ = 0.0;
};

// Quadratic base plus separable log-cosh terms:
//   f(x, u) = f_quad(x, u) + sum_i alpha_i phi(x_i) + sum_j beta_j phi(u_j),
// phi(s) = log cosh s. Coefficients must be >= 0 so convexity is preserved.
class PerturbedQuadraticCost final : public StageCost {
 public:
  PerturbedQuadraticCost(QuadraticCost base, Eigen::VectorXd alpha, Eigen::VectorXd beta);

  int state_dim() const override { return base_.state_dim(); }
  int control_dim() const override { return base_.control_dim(); }

  double eval(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const override;
  Eigen::VectorXd grad(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const override;
  Eigen::MatrixXd hess(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const override;

  double convexity_modulus() const override { return base_.convexity_modulus(); }
  std::optional<double> cross_gain_bound(double radius) const override {
    // The log-cosh terms only add a nonnegative diagonal to f_uu.
    return base_.cross_gain_bound(radius);
  }

  std::unique_ptr<StageCost> clone() const override;

  const QuadraticCost& base() const { return base_; }
  const Eigen::VectorXd& alpha() const { return alpha_; }
  const Eigen::VectorXd& beta() const { return beta_; }

 private:
  QuadraticCost base_;
  Eigen::VectorXd alpha_, beta_;
};

// Overflow-safe log cosh:  |s| + log1p(exp(-2|s|)) - log 2.
double log_cosh(double s);

struct PredicateCheck {
  bool holds = false;
  double observed = 0.0;  // smallest sampled Hessian eigenvalue / largest sampled ratio
};

// Samples Hessians at n_samples points of the box [x_lo, x_hi] x [u_lo, u_hi]
// and compares the smallest eigenvalue seen against the declared modulus
// (slack 1e-10). Deterministic for a fixed seed.
PredicateCheck check_strong_convexity(const StageCost& cost,
                                      const Eigen::VectorXd& x_lo, const Eigen::VectorXd& x_hi,
                                      const Eigen::VectorXd& u_lo, const Eigen::VectorXd& u_hi,
                                      int n_samples, std::uint64_t seed);

// Samples |f_xu f_uu^{-1}|_F over {|x| <= radius} x {|u| <= control_radius} and
// compares the sup against the declared bound. holds is false when no bound is
// declared.
PredicateCheck check_cross_gain(const StageCost& cost, double radius, double control_radius,
                                int n_samples, std::uint64_t seed);

}  // namespace turnpike
