#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "turnpike/errors.hpp"

// Direct Fortran bindings: the LAPACKE convenience wrappers for these routines
// are broken on some distributions (workspace-query segfault in dtrsen), so we
// manage workspace ourselves.
extern "C" {
void dtrsen_(const char* job, const char* compq, const int* select, const int* n,
             double* t, const int* ldt, double* q, const int* ldq,
             double* wr, double* wi, int* m, double* s, double* sep,
             double* work, const int* lwork, int* iwork, const int* liwork, int* info);
void dgbsv_(const int* n, const int* kl, const int* ku, const int* nrhs,
            double* ab, const int* ldab, int* ipiv, double* b, const int* ldb, int* info);
}

namespace turnpike::detail {

// Orthonormal basis of the invariant subspace of M spanned by the eigenvalues
// the selector accepts. Complex pairs are kept together (the selector is asked
// for both signs of the imaginary part).
template <class Selector>
Eigen::MatrixXd invariant_subspace(const Eigen::MatrixXd& M, Selector&& accept) {
  const int n = static_cast<int>(M.rows());
  if (n == 0) return Eigen::MatrixXd(0, 0);

  Eigen::RealSchur<Eigen::MatrixXd> schur(M);
  if (schur.info() != Eigen::Success) throw InternalError("real Schur iteration failed");
  Eigen::MatrixXd T = schur.matrixT();
  Eigen::MatrixXd U = schur.matrixU();

  std::vector<int> select(n, 0);
  int total = 0;
  for (int i = 0; i < n;) {
    if (i + 1 < n && T(i + 1, i) != 0.0) {
      const double a = T(i, i), b = T(i, i + 1), c = T(i + 1, i), d = T(i + 1, i + 1);
      const double re = 0.5 * (a + d);
      const double disc = 0.25 * (a - d) * (a - d) + b * c;
      const double im = std::sqrt(std::max(0.0, -disc));
      const int flag = (accept(re, im) || accept(re, -im)) ? 1 : 0;
      select[i] = select[i + 1] = flag;
      total += 2 * flag;
      i += 2;
    } else {
      select[i] = accept(T(i, i), 0.0) ? 1 : 0;
      total += select[i];
      ++i;
    }
  }
  if (total == 0) return Eigen::MatrixXd(n, 0);
  if (total == n) return Eigen::MatrixXd::Identity(n, n);

  std::vector<double> wr(n), wi(n);
  int m_out = 0, info = 0;
  double s_out = 0.0, sep_out = 0.0;
  const int lwork = std::max(1, 4 * n);
  const int liwork = std::max(1, 2 * n);
  std::vector<double> work(lwork);
  std::vector<int> iwork(liwork);
  dtrsen_("N", "V", select.data(), &n, T.data(), &n, U.data(), &n, wr.data(), wi.data(), &m_out,
          &s_out, &sep_out, work.data(), &lwork, iwork.data(), &liwork, &info);
  if (info != 0)
    throw InternalError("eigenvalue reordering failed (dtrsen info=" + std::to_string(info) + ")");
  return U.leftCols(m_out);
}

// Column-major LAPACK band storage with assembly helpers; solve() runs dgbsv
// (partial-pivoted banded LU) in place.
class BandedMatrix {
 public:
  BandedMatrix(int n, int kl, int ku)
      : n_(n), kl_(kl), ku_(ku), ldab_(2 * kl + ku + 1), storage_(static_cast<size_t>(ldab_) * n, 0.0) {}

  void reset() { std::fill(storage_.begin(), storage_.end(), 0.0); }

  void add(int i, int j, double v) {
    // Callers must stay inside the declared band.
    storage_[static_cast<size_t>(j) * ldab_ + (kl_ + ku_ + i - j)] += v;
  }

  void add_block(int i0, int j0, const Eigen::MatrixXd& blk) {
    for (int j = 0; j < blk.cols(); ++j)
      for (int i = 0; i < blk.rows(); ++i) add(i0 + i, j0 + j, blk(i, j));
  }

  // Solves in place; the factorization overwrites the band storage.
  Eigen::VectorXd solve(Eigen::VectorXd rhs) {
    const int nrhs = 1;
    int info = 0;
    std::vector<int> ipiv(n_);
    dgbsv_(&n_, &kl_, &ku_, &nrhs, storage_.data(), &ldab_, ipiv.data(), rhs.data(), &n_, &info);
    if (info != 0)
      throw SolverError("banded factorization failed (dgbsv info=" + std::to_string(info) +
                        "): singular discrete saddle system");
    return rhs;
  }

 private:
  int n_, kl_, ku_, ldab_;
  std::vector<double> storage_;
};

}  // namespace turnpike::detail
