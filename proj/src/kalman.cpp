#include "turnpike/kalman.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace turnpike {

Eigen::MatrixXd controllability_matrix(const LinearSystem& sys) {
  const int n = sys.n();
  const int m = sys.m();
  Eigen::MatrixXd C(n, n * m);
  Eigen::MatrixXd block = sys.B;
  for (int p = 0; p < n; ++p) {
    C.middleCols(p * m, m) = block;
    if (p + 1 < n) block = sys.A * block;
  }
  return C;
}

KalmanDecomposition decompose(const LinearSystem& sys, double rank_tol) {
  const int n = sys.n();
  const Eigen::MatrixXd C = controllability_matrix(sys);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(C, Eigen::ComputeFullU);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv(0) : 0.0;
  if (rank_tol <= 0.0)
    rank_tol = static_cast<double>(C.rows()) * static_cast<double>(C.cols()) *
               std::numeric_limits<double>::epsilon() * smax;

  int k = 0;
  bool thin = false;
  for (int i = 0; i < sv.size() && i < n; ++i) {
    if (sv(i) > rank_tol) ++k;
    if (rank_tol > 0.0 && sv(i) > rank_tol / 100.0 && sv(i) < rank_tol * 100.0) thin = true;
  }

  KalmanDecomposition dec;
  dec.k = k;
  dec.singular_values = sv;
  dec.rank_tol = rank_tol;
  dec.rank_margin_thin = thin;
  dec.P1 = svd.matrixU().leftCols(k);
  dec.P2 = svd.matrixU().rightCols(n - k);
  dec.A11 = dec.P1.transpose() * sys.A * dec.P1;
  dec.A12 = dec.P1.transpose() * sys.A * dec.P2;
  dec.A22 = dec.P2.transpose() * sys.A * dec.P2;
  dec.B1 = dec.P1.transpose() * sys.B;

  const double block_tol = 1e-10 * (1.0 + sys.A.norm() + sys.B.norm());
  const double a21 = (dec.P2.transpose() * sys.A * dec.P1).norm();
  const double b2 = (dec.P2.transpose() * sys.B).norm();
  if (a21 > block_tol || b2 > block_tol) {
    std::ostringstream os;
    os << "reachable-block structure violated after projection: |A21| = " << a21 << ", |B2| = " << b2
       << " exceed " << block_tol << " (ill-determined rank split, threshold " << rank_tol << ")";
    throw InternalError(os.str());
  }
  return dec;
}

bool hautus_controllable(const Eigen::MatrixXd& A11, const Eigen::MatrixXd& B1, double tol) {
  const int k = static_cast<int>(A11.rows());
  if (k == 0) return true;
  const double scale = 1.0 + A11.norm() + B1.norm();
  const Eigen::VectorXcd eigs = Eigen::EigenSolver<Eigen::MatrixXd>(A11).eigenvalues();
  Eigen::MatrixXcd pencil(k, k + B1.cols());
  pencil.rightCols(B1.cols()) = B1.cast<std::complex<double>>();
  for (int i = 0; i < eigs.size(); ++i) {
    pencil.leftCols(k) =
        A11.cast<std::complex<double>>() - eigs(i) * Eigen::MatrixXcd::Identity(k, k);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(pencil);
    if (svd.singularValues().minCoeff() <= tol * scale) return false;
  }
  return true;
}

}  // namespace turnpike
