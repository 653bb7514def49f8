#pragma once

#include "sis/types.hpp"

#include <optional>

namespace sis::linalg {

/// Reciprocal 1-norm condition estimate from a partial-pivot LU. Empty matrices
/// report 1 (trivially invertible); non-finite estimates report 0.
double rcond(const Matrix& a);

/// Solves a·X = b with a pivoted LU, or returns nullopt when rcond(a) is not
/// above kRcondTolerance.
std::optional<Matrix> try_solve(const Matrix& a, const Matrix& b);

/// ‖a − aᵀ‖∞ (max absolute entry of the antisymmetric part, times two).
double asymmetry(const Matrix& a);

/// Smallest eigenvalue of the symmetric part of a; +inf for empty matrices.
double min_eigenvalue(const Matrix& a);

/// Symmetric and positive semidefinite within the given tolerances.
bool is_psd(const Matrix& a, double sym_tol, double eig_tol);

/// Max absolute entry, 0 for empty operands.
double max_abs(const Matrix& a);

/// Square root factor L with L·Lᵀ = a, built from the symmetric eigendecomposition
/// with eigenvalues in [-clip_tol, 0) clipped to zero. Throws ValidationError
/// on eigenvalues below -clip_tol.
Matrix psd_sqrt(const Matrix& a, double clip_tol = 1e-10);

}  // namespace sis::linalg
