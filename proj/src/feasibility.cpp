#include "turnpike/feasibility.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "detail/lapack.hpp"

namespace turnpike {

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Feasible: return "feasible";
    case Verdict::Infeasible: return "infeasible";
    case Verdict::IndeterminateMarginal: return "indeterminate-marginal";
  }
  return "?";
}

Eigen::VectorXd solve_offset(const Eigen::MatrixXd& A22, const Eigen::VectorXd& rhs, double tol) {
  if (A22.rows() == 0) return Eigen::VectorXd(0);
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A22);
  const Eigen::VectorXd c = cod.solve(rhs);
  const double resid = (A22 * c - rhs).norm();
  if (resid > tol * (1.0 + rhs.norm())) {
    std::ostringstream os;
    os << "offset equation A22 c = P2'b is inconsistent (residual " << resid
       << "): the drift pushes the unreachable block, no steady regime exists";
    throw AssumptionError(os.str());
  }
  return c;
}

Eigen::MatrixXd stable_subspace_basis(const Eigen::MatrixXd& A22, double stab_tol) {
  return detail::invariant_subspace(
      A22, [stab_tol](double re, double /*im*/) { return re < -stab_tol; });
}

Eigen::MatrixXd kernel_basis(const Eigen::MatrixXd& A22, double rank_tol) {
  const int d = static_cast<int>(A22.rows());
  if (d == 0) return Eigen::MatrixXd(0, 0);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A22, Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  if (rank_tol <= 0.0) rank_tol = d * std::numeric_limits<double>::epsilon() * sv(0);
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > rank_tol) ++rank;
  return svd.matrixV().rightCols(d - rank);
}

FeasibilitySpaces build_feasibility_spaces(const KalmanDecomposition& dec, const LinearSystem& sys,
                                           const FeasibilityTolerances& tol) {
  FeasibilitySpaces sp;
  const Eigen::VectorXd rhs = dec.P2.transpose() * sys.b;
  sp.c = solve_offset(dec.A22, rhs, tol.offset);
  sp.offset_residual = dec.A22.rows() > 0 ? (dec.A22 * sp.c - rhs).norm() : 0.0;
  sp.V1 = stable_subspace_basis(dec.A22, tol.stability);
  sp.V2 = kernel_basis(dec.A22, tol.kernel);
  const double st = tol.stability;
  sp.marginal = detail::invariant_subspace(dec.A22, [st](double re, double im) {
    return std::abs(re) <= st && (re * re + im * im) > st * st;
  });
  sp.marginal_spectrum = sp.marginal.cols() > 0;

  // Sanity of the computed spaces: V1 invariant, V2 annihilated, joint basis
  // independent. These guard against a mis-set stability band.
  const double scale = 1.0 + dec.A22.norm();
  if (sp.V1.cols() > 0) {
    const Eigen::MatrixXd AV = dec.A22 * sp.V1;
    if ((AV - sp.V1 * (sp.V1.transpose() * AV)).norm() > 1e-8 * scale)
      throw InternalError("stable subspace basis is not invariant");
  }
  if (sp.V2.cols() > 0 && (dec.A22 * sp.V2).norm() > 1e-8 * scale)
    throw InternalError("kernel basis is not annihilated by A22");
  if (sp.d1() + sp.d2() > 0) {
    Eigen::MatrixXd J(dec.A22.rows(), sp.d1() + sp.d2());
    J << sp.V1, sp.V2;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
    if (svd.singularValues().minCoeff() < 1e-8)
      throw InternalError("stable and kernel bases are numerically dependent");
  }
  return sp;
}

FeasibilityCertificate certify(const FeasibilitySpaces& spaces, const KalmanDecomposition& dec,
                               const Eigen::VectorXd& x, double membership_tol) {
  if (x.size() != dec.P1.rows()) throw ConfigError("initial state dimension mismatch");
  const int d = static_cast<int>(dec.P2.cols());

  FeasibilityCertificate cert;
  cert.marginal_spectrum = spaces.marginal_spectrum;
  cert.w = dec.P2.transpose() * x + spaces.c;
  cert.q1 = Eigen::VectorXd::Zero(d);
  cert.q2 = Eigen::VectorXd::Zero(d);

  const int cols = spaces.d1() + spaces.d2();
  Eigen::VectorXd rho = cert.w;
  if (cols > 0) {
    Eigen::MatrixXd J(d, cols);
    J << spaces.V1, spaces.V2;
    const Eigen::VectorXd xi = Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(J).solve(cert.w);
    cert.q1 = spaces.V1 * xi.head(spaces.d1());
    cert.q2 = spaces.V2 * xi.tail(spaces.d2());
    rho = cert.w - cert.q1 - cert.q2;
  }
  cert.residual = rho.norm();

  const double thresh = membership_tol * (1.0 + cert.w.norm());
  if (cert.residual <= thresh) {
    cert.feasible = true;
    cert.verdict = Verdict::Feasible;
    return cert;
  }

  cert.feasible = false;
  cert.verdict = Verdict::Infeasible;
  if (spaces.marginal_spectrum) {
    // If extending the split basis by the marginal directions explains the
    // residual, the rejection hinges on eigenvalues we cannot sign at this
    // precision; report that honestly instead of guessing.
    Eigen::MatrixXd Jm(d, cols + static_cast<int>(spaces.marginal.cols()));
    Jm << spaces.V1, spaces.V2, spaces.marginal;
    const Eigen::VectorXd xi = Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(Jm).solve(rho);
    if ((rho - Jm * xi).norm() <= thresh) cert.verdict = Verdict::IndeterminateMarginal;
  }
  return cert;
}

}  // namespace turnpike
