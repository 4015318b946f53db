#pragma once

#include <Eigen/Dense>

#include "turnpike/linear_system.hpp"

namespace turnpike {

// Orthonormal split of the state space into the subspace reachable through B
// and its orthogonal complement, with the matching block form of (A, B):
//   P'AP = [A11 A12; 0 A22],  P'B = [B1; 0],  P = [P1 P2] orthogonal.
struct KalmanDecomposition {
  Eigen::MatrixXd P1;   // n x k
  Eigen::MatrixXd P2;   // n x (n-k)
  Eigen::MatrixXd A11;  // k x k
  Eigen::MatrixXd A12;  // k x (n-k)
  Eigen::MatrixXd A22;  // (n-k) x (n-k)
  Eigen::MatrixXd B1;   // k x m
  int k = 0;
  Eigen::VectorXd singular_values;  // of the controllability matrix, descending
  double rank_tol = 0.0;            // threshold actually applied
  bool rank_margin_thin = false;    // some singular value within 100x of the threshold
};

// [B, AB, ..., A^{n-1}B], n x (n*m).
Eigen::MatrixXd controllability_matrix(const LinearSystem& sys);

// SVD-based rank split. rank_tol <= 0 selects n*m*eps*sigma_max. Throws
// InternalError if the recovered blocks fail the zero-structure check
// |P2'AP1|, |P2'B| <= 1e-10 (1 + |A| + |B|).
KalmanDecomposition decompose(const LinearSystem& sys, double rank_tol = 0.0);

// Hautus test: min over eigenvalues z of A11 of sigma_min([A11 - z I, B1]),
// compared against tol * (1 + |A11| + |B1|). Vacuously true for k = 0.
bool hautus_controllable(const Eigen::MatrixXd& A11, const Eigen::MatrixXd& B1, double tol = 1e-8);

}  // namespace turnpike
