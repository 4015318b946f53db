#pragma once

#include <Eigen/Dense>

#include "turnpike/errors.hpp"

namespace turnpike {

// Time-invariant affine dynamics  X' = A X + B u + b.
struct LinearSystem {
  Eigen::MatrixXd A;  // n x n
  Eigen::MatrixXd B;  // n x m
  Eigen::VectorXd b;  // n

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }

  // Validates shapes and finiteness; throws ConfigError.
  static LinearSystem make(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::VectorXd b);
};

}  // namespace turnpike
