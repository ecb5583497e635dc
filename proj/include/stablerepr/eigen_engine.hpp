#pragma once

#include <cstdint>
#include <vector>

#include "stablerepr/linalg.hpp"

namespace stablerepr {

/// Real Schur form A = U T Uᵀ. T is quasi upper triangular with 1x1 and 2x2
/// diagonal blocks; 2x2 blocks always carry a complex conjugate pair (real
/// pairs are split during iteration). block_starts lists the first index of
/// each diagonal block, so a prefix of columns of U is block-aligned iff its
/// length appears in block_starts (or equals n).
struct RealSchurResult {
  Matrix u;
  Matrix t;
  std::vector<Complex> eigenvalues;       // diagonal order of t
  std::vector<std::size_t> block_starts;  // ascending, starts with 0

  bool is_block_aligned(std::size_t k) const;
  /// Smallest block-aligned size >= k (rounds up past a split 2x2 pair).
  std::size_t aligned_size(std::size_t k) const;
};

/// Eigenvalues of a general real matrix. Balances, reduces to Hessenberg
/// form, then runs the implicitly shifted double QR iteration. Unordered.
std::vector<Complex> dense_eigenvalues(const Matrix& a);

/// Real Schur decomposition (no balancing, orthogonal U accumulated). When
/// `order` is true, diagonal blocks are sorted by descending eigenvalue
/// magnitude, ties by descending real part, via direct adjacent-block swaps.
RealSchurResult real_schur_decompose(const Matrix& a, bool order = true);

/// Right eigenvectors recovered from a Schur form by back substitution.
/// Column j corresponds to eigenvalues[j]; conjugate pairs give conjugate
/// columns. Vectors are normalized to unit Euclidean norm. Near-defective
/// matrices yield nearly dependent columns rather than an error.
std::vector<std::vector<Complex>> eigenvectors_from_schur(const RealSchurResult& schur);

struct SymmetricEig {
  Vector eigenvalues;  // descending
  Matrix vectors;      // orthonormal columns, matching order
};

/// Cyclic Jacobi eigensolver for symmetric matrices.
SymmetricEig symmetric_eigen(const Matrix& a);

struct SvdResult {
  Matrix u;      // m x min(m,n) (orthonormal columns)
  Vector sigma;  // descending, length min(m,n)
  Matrix v;      // n x min(m,n)
};

/// One-sided Jacobi SVD of a general dense matrix.
SvdResult singular_value_decompose(const Matrix& a);

/// sigma_max / sigma_min for a complex matrix given as re + i*im, computed
/// through the [re -im; im re] real embedding.
double complex_condition_number(const Matrix& re, const Matrix& im);

bool spectra_match_as_multisets(std::vector<Complex> a, std::vector<Complex> b, double tol);

}  // namespace stablerepr
