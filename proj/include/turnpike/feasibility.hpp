#pragma once

#include <Eigen/Dense>

#include "turnpike/kalman.hpp"

namespace turnpike {

struct FeasibilityTolerances {
  double offset = 1e-10;     // consistency of A22 c = P2'b, relative
  double stability = 1e-9;   // half-width of the spectral band around Re = 0
  double kernel = 0.0;       // rank threshold for ker A22; <= 0 picks a relative default
  double membership = 1e-8;  // certify residual threshold, relative
};

// Everything needed to test initial states for membership in the feasible set:
// the offset c solving A22 c = P2'b (minimum norm), an orthonormal basis V1 of
// the stable invariant subspace of A22, an orthonormal basis V2 of ker A22, and
// a basis of the marginal-band invariant subspace (|Re| within the stability
// tolerance, modulus not) used to attribute undecidable residuals.
struct FeasibilitySpaces {
  Eigen::VectorXd c;
  Eigen::MatrixXd V1;
  Eigen::MatrixXd V2;
  Eigen::MatrixXd marginal;
  bool marginal_spectrum = false;
  double offset_residual = 0.0;

  int d1() const { return static_cast<int>(V1.cols()); }
  int d2() const { return static_cast<int>(V2.cols()); }
};

enum class Verdict { Feasible, Infeasible, IndeterminateMarginal };

const char* verdict_name(Verdict v);

// Split of w = P2'x + c along V1 and V2. feasible means the residual left over
// after the split is negligible. When infeasible, verdict distinguishes a
// residual that lives in the marginal band (undecidable at this precision)
// from a clear rejection.
struct FeasibilityCertificate {
  bool feasible = false;
  Verdict verdict = Verdict::Infeasible;
  Eigen::VectorXd w;
  Eigen::VectorXd q1;  // component along V1
  Eigen::VectorXd q2;  // component along V2
  double residual = 0.0;
  bool marginal_spectrum = false;
};

// Minimum-norm solution of A22 c = rhs; throws AssumptionError when the system
// is inconsistent beyond tol * (1 + |rhs|).
Eigen::VectorXd solve_offset(const Eigen::MatrixXd& A22, const Eigen::VectorXd& rhs, double tol = 1e-10);

// Orthonormal basis of the invariant subspace for Re(eig) < -stab_tol,
// via real Schur with eigenvalue reordering.
Eigen::MatrixXd stable_subspace_basis(const Eigen::MatrixXd& A22, double stab_tol = 1e-9);

// Orthonormal basis of ker A22 from the SVD. rank_tol <= 0 picks a relative
// default. Note: the kernel, not the generalized eigenspace of 0 — a nilpotent
// block contributes only its bottom stage.
Eigen::MatrixXd kernel_basis(const Eigen::MatrixXd& A22, double rank_tol = 0.0);

FeasibilitySpaces build_feasibility_spaces(const KalmanDecomposition& dec, const LinearSystem& sys,
                                           const FeasibilityTolerances& tol = {});

FeasibilityCertificate certify(const FeasibilitySpaces& spaces, const KalmanDecomposition& dec,
                               const Eigen::VectorXd& x, double membership_tol = 1e-8);

}  // namespace turnpike
