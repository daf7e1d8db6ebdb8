#pragma once

#include <cstddef>
#include <vector>

#include "gsplab/matrix.hpp"

namespace gsplab {

/// Orthonormal eigendecomposition M = V diag(values) V^T of a symmetric matrix.
///
/// Eigenvalues are ascending; column i of `vectors` pairs with `values[i]`.
/// Each column is sign-normalized so that its largest-magnitude entry is
/// positive (first such entry on ties).
struct SymmetricEigen {
  std::vector<double> values;
  Matrix vectors;

  /// V diag(values) V^T
  Matrix reconstruct() const;
};

enum class EigenMethod {
  automatic,       ///< Jacobi up to kJacobiMaxSize, tridiagonal QL above
  jacobi,          ///< cyclic Jacobi rotations
  tridiagonal_ql,  ///< Householder reduction followed by implicit QL
};

inline constexpr std::size_t kJacobiMaxSize = 64;
inline constexpr double kSymmetryTolerance = 1e-10;

/// Throws DimensionError for non-square and SymmetryError for asymmetric input.
void require_symmetric(const Matrix& m, double tol = kSymmetryTolerance);

SymmetricEigen sym_eig(const Matrix& m, EigenMethod method = EigenMethod::automatic);

/// Eigenvalues only (ascending). Skips eigenvector accumulation where the
/// method allows it.
std::vector<double> sym_eigvals(const Matrix& m, EigenMethod method = EigenMethod::automatic);

/// Largest singular value, sqrt(lambda_max(M^T M)) (or of M M^T when that is smaller).
double spectral_norm(const Matrix& m);

/// S^k X by k successive products; S^k is never formed.
Matrix mat_power_apply(const Matrix& s, std::size_t k, const Matrix& x);

/// Least-squares solution of min ||A x - b||_2 via Householder QR.
/// Requires rows >= cols and full column rank.
std::vector<double> least_squares(const Matrix& a, std::span<const double> b);

/// Orthogonal polar factor of a square matrix (W Z^T from M = W Sigma Z^T).
/// Rank-deficient directions are completed to an orthonormal basis.
Matrix polar_factor(const Matrix& m);

}  // namespace gsplab
