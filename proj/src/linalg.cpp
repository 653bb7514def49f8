#include "sis/linalg.hpp"

#include <cmath>
#include <limits>

namespace sis::linalg {

double rcond(const Matrix& a) {
  if (a.rows() != a.cols()) return 0.0;
  if (a.size() == 0) return 1.0;
  if (!a.allFinite()) return 0.0;
  Eigen::PartialPivLU<Matrix> lu(a);
  // PartialPivLU does not flag exact zero pivots; its rcond estimate turns them
  // into inf/nan.
  const auto diag = lu.matrixLU().diagonal();
  if ((diag.array() == 0.0).any()) return 0.0;
  const double r = lu.rcond();
  return std::isfinite(r) ? r : 0.0;
}

std::optional<Matrix> try_solve(const Matrix& a, const Matrix& b) {
  if (a.rows() != a.cols() || a.rows() != b.rows()) {
    throw ShapeError("try_solve: operand shapes do not match");
  }
  if (a.size() == 0) return Matrix::Zero(0, b.cols());
  if (!(rcond(a) > kRcondTolerance)) return std::nullopt;
  return Matrix(a.partialPivLu().solve(b));
}

double asymmetry(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  return (a - a.transpose()).cwiseAbs().maxCoeff();
}

double min_eigenvalue(const Matrix& a) {
  if (a.size() == 0) return std::numeric_limits<double>::infinity();
  const Matrix sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

bool is_psd(const Matrix& a, double sym_tol, double eig_tol) {
  if (a.rows() != a.cols()) return false;
  if (!a.allFinite()) return false;
  return asymmetry(a) <= sym_tol && min_eigenvalue(a) >= -eig_tol;
}

double max_abs(const Matrix& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

Matrix psd_sqrt(const Matrix& a, double clip_tol) {
  if (a.rows() != a.cols()) throw ShapeError("psd_sqrt: matrix is not square");
  if (a.size() == 0) return Matrix(0, 0);
  const Matrix sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  Vector lambda = eig.eigenvalues();
  for (Eigen::Index k = 0; k < lambda.size(); ++k) {
    if (lambda(k) < -clip_tol) {
      throw ValidationError("covariance has negative eigenvalue " + std::to_string(lambda(k)));
    }
    lambda(k) = std::sqrt(std::max(lambda(k), 0.0));
  }
  return eig.eigenvectors() * lambda.asDiagonal();
}

}  // namespace sis::linalg
