#pragma once

#include <string>
#include <vector>

#include "stablerepr/eigen_engine.hpp"
#include "stablerepr/linalg.hpp"

namespace stablerepr {

/// Diagonal inner-product space induced by a data distribution xi.
/// All entries must be strictly positive (callers floor empirical
/// distributions first, see mdp floor_distribution).
class WeightedSpace {
 public:
  explicit WeightedSpace(Vector xi);
  static WeightedSpace uniform(std::size_t n);

  std::size_t dim() const { return xi_.size(); }
  const Vector& xi() const { return xi_; }
  double xi(std::size_t i) const { return xi_[i]; }

  /// Xi^{1/2} A Xi^{-1/2}: maps the xi-geometry onto the Euclidean one.
  Matrix whiten(const Matrix& a) const;
  /// Xi^{-1/2} B Xi^{1/2}: inverse of whiten.
  Matrix unwhiten(const Matrix& b) const;
  /// Xi^{1/2} Phi: columns of a basis carried into whitened coordinates.
  Matrix whiten_basis(const Matrix& phi) const;
  Matrix unwhiten_basis(const Matrix& q) const;
  Vector whiten_vector(const Vector& v) const;

 private:
  Vector xi_, sqrt_, inv_sqrt_;
};

double weighted_inner(const Vector& v, const Vector& w, const WeightedSpace& space);
double weighted_norm(const Vector& v, const WeightedSpace& space);

struct Spectrum {
  std::vector<Complex> eigenvalues;  // descending |z|, ties by descending Re
  std::string ordering = "magnitude-desc";

  double spectral_radius() const;
  double min_real_part() const;
  double max_real_part() const;
};

/// Eigenvalues of a general real matrix, sorted per Spectrum's contract.
Spectrum general_eigenvalues(const Matrix& a);

struct OrthogonalBasis {
  Matrix columns;  // n x d with columnsᵀ Xi columns = I
  Vector xi;       // the defining weights
};

/// Xi-orthonormalizes the given columns (modified Gram-Schmidt with one
/// re-orthogonalization pass in whitened coordinates). Throws
/// std::invalid_argument naming the first dependent column on rank
/// deficiency.
OrthogonalBasis orthogonalize(const Matrix& columns, const WeightedSpace& space);

/// Pi = Phi (Phiᵀ Xi Phi)^{-1} Phiᵀ Xi. Full column rank required.
Matrix projection_operator(const Matrix& basis, const WeightedSpace& space);

/// Applies the projection onto Span(basis) to the columns of m without
/// forming the n x n operator.
Matrix project_columns(const Matrix& basis, const WeightedSpace& space, const Matrix& m);

struct SelfAdjointEig {
  Vector eigenvalues;  // real, descending
  Matrix vectors;      // n x n, Xi-orthonormal columns
};

/// Spectral decomposition of a Xi-self-adjoint matrix, A = U Lambda Uᵀ Xi.
/// Unless `symmetrize` is set, requires ‖Xi A − Aᵀ Xi‖_F < 1e-8.
SelfAdjointEig self_adjoint_eig(const Matrix& a, const WeightedSpace& space,
                                bool symmetrize = false);

struct WeightedSvd {
  Matrix u;      // n x d, Xi-orthonormal
  Vector sigma;  // descending
  Matrix v;      // n x d, Xi-orthonormal
  Vector all_sigma;  // full set, for truncation-error queries
};

/// Rank-d factors of A = U Sigma Vᵀ Xi minimizing the Xi operator-norm error.
WeightedSvd weighted_svd(const Matrix& a, const WeightedSpace& space, std::size_t d);

struct WeightedSchur {
  Matrix basis;             // n x n, Xi-orthonormal
  Matrix quasi_triangular;  // blocks ordered by descending |lambda|
  std::vector<Complex> eigenvalues;
  std::vector<std::size_t> block_starts;

  bool is_block_aligned(std::size_t k) const;
  std::size_t aligned_size(std::size_t k) const;
};

/// A = U R U* with U Xi-orthogonal and R quasi upper triangular; leading
/// block-aligned column prefixes of U span A-invariant subspaces.
WeightedSchur real_schur(const Matrix& a, const WeightedSpace& space);

/// kappa_Xi(A) = ‖A‖_Xi ‖A^{-1}‖_Xi. Throws NumericalError on singular input.
double weighted_condition_number(const Matrix& a, const WeightedSpace& space);

/// Whitened Frobenius norm of the difference of the two span projectors,
/// ‖Xi^{1/2}(Pi_a − Pi_b)Xi^{-1/2}‖_F. Zero iff the spans coincide.
double subspace_distance(const Matrix& phi_a, const Matrix& phi_b, const WeightedSpace& space);

/// sigma_min/sigma_max of the whitened columns; used for rank checks.
double relative_rank_gap(const Matrix& columns, const WeightedSpace& space);

/// Euclidean modified Gram-Schmidt used by the whitened paths. Returns the
/// orthonormalized columns; `rank` receives the detected numerical rank.
/// With `stop_at_dependence` (the Krylov-chain convention) the result is the
/// prefix before the first dependent column; otherwise dependent columns are
/// skipped and later independent ones kept.
Matrix euclidean_orthonormalize(const Matrix& columns, std::size_t* rank,
                                double rel_tol = 1e-10, bool stop_at_dependence = true);

}  // namespace stablerepr
