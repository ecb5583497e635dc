#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stablerepr/mdp.hpp"
#include "stablerepr/weighted.hpp"

namespace stablerepr {

enum class ReprMethod {
  EigSymm,
  SafeEigSymm,
  ProtoValue,
  Svd,
  SvdSr,
  Schur,
  Krylov,
  OrthogKrylov,
  Custom,
};

const char* repr_method_name(ReprMethod m);
std::optional<ReprMethod> repr_method_from_name(const std::string& name);

/// SVD factors retained for the successor-representation spectrum test.
struct SvdFactors {
  Matrix u;
  Vector sigma;
  Matrix v;
};

struct Representation {
  Matrix phi;  // n x effective_d
  ReprMethod method = ReprMethod::Custom;
  bool is_orthogonal = false;
  std::size_t effective_d = 0;
  std::size_t requested_d = 0;
  double gamma = 0.0;
  std::vector<std::string> notes;
  std::optional<SvdFactors> svd;
};

/// K = (P + Xi^{-1} Pᵀ Xi) / 2, the Xi-self-adjoint part of the transition.
Matrix symmetrized_transition(const PolicyMatrix& pm, const WeightedSpace& space);

enum class SpectralVariant { EigSymm, SafeEigSymm, ProtoValue };

/// Top (or above-threshold-skipping) eigenvectors of the symmetrized
/// transition matrix. ProtoValue additionally requires xi to match the
/// stationary distribution of p_pi within 1e-6.
Representation spectral_family(const PolicyMatrix& pm, const WeightedSpace& space,
                               std::size_t d, SpectralVariant variant, double gamma);

/// 1-based index of the first eigenvalue of K strictly below 1/gamma.
std::size_t safe_spectral_index(const Vector& eigenvalues_desc, double gamma);

enum class SvdVariant { Svd, SvdSr };

/// Left singular vectors of P (Svd) or of the successor representation
/// (I - gamma P)^{-1} (SvdSr). Factors are retained on the result.
Representation svd_family(const PolicyMatrix& pm, const WeightedSpace& space, std::size_t d,
                          double gamma, SvdVariant variant);

/// Leading block-aligned d columns of the ordered Xi-weighted real Schur
/// basis of p_pi. Rounds d up by one when it would split a conjugate pair.
Representation schur_representation(const PolicyMatrix& pm, const WeightedSpace& space,
                                    std::size_t d);

enum class KrylovVariant { Krylov, OrthogKrylov };

/// Spans {r, P r, ..., P^{d-1} r}. Columns are normalized to unit Xi-norm;
/// the raw variant keeps them as-is, the orthogonal variant Gram-Schmidts
/// them. Dependent directions truncate effective_d with a note.
Representation krylov_family(const PolicyMatrix& pm, const WeightedSpace& space,
                             const Vector& reward, std::size_t d, KrylovVariant variant);

/// Column-rank and orthogonality consistency check (throws on violation).
void validate_representation(const Representation& rep, const WeightedSpace& space);

}  // namespace stablerepr
