#include "stablerepr/representations.hpp"

#include <algorithm>
#include <cmath>

namespace stablerepr {

const char* repr_method_name(ReprMethod m) {
  switch (m) {
    case ReprMethod::EigSymm: return "eigsymm";
    case ReprMethod::SafeEigSymm: return "safe-eigsymm";
    case ReprMethod::ProtoValue: return "protovalue";
    case ReprMethod::Svd: return "svd";
    case ReprMethod::SvdSr: return "svd-sr";
    case ReprMethod::Schur: return "schur";
    case ReprMethod::Krylov: return "krylov";
    case ReprMethod::OrthogKrylov: return "orthog-krylov";
    case ReprMethod::Custom: return "custom";
  }
  return "custom";
}

std::optional<ReprMethod> repr_method_from_name(const std::string& name) {
  for (ReprMethod m : {ReprMethod::EigSymm, ReprMethod::SafeEigSymm, ReprMethod::ProtoValue,
                       ReprMethod::Svd, ReprMethod::SvdSr, ReprMethod::Schur, ReprMethod::Krylov,
                       ReprMethod::OrthogKrylov, ReprMethod::Custom}) {
    if (name == repr_method_name(m)) return m;
  }
  return std::nullopt;
}

Matrix symmetrized_transition(const PolicyMatrix& pm, const WeightedSpace& space) {
  const std::size_t n = pm.p_pi.rows();
  if (space.dim() != n) throw std::invalid_argument("symmetrized_transition: dimension mismatch");
  Matrix k(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      k(i, j) = 0.5 * (pm.p_pi(i, j) + space.xi(j) * pm.p_pi(j, i) / space.xi(i));
  return k;
}

std::size_t safe_spectral_index(const Vector& eigenvalues_desc, double gamma) {
  const double threshold = 1.0 / gamma;
  for (std::size_t i = 0; i < eigenvalues_desc.size(); ++i)
    if (eigenvalues_desc[i] < threshold) return i + 1;
  return eigenvalues_desc.size() + 1;  // empty safe set
}

Representation spectral_family(const PolicyMatrix& pm, const WeightedSpace& space,
                               std::size_t d, SpectralVariant variant, double gamma) {
  const std::size_t n = pm.p_pi.rows();
  if (d == 0 || d > n) throw std::invalid_argument("spectral_family: d out of range");

  if (variant == SpectralVariant::ProtoValue) {
    const Vector stat = stationary_distribution(pm);
    double diff = 0.0;
    for (std::size_t i = 0; i < n; ++i) diff = std::max(diff, std::abs(stat[i] - space.xi(i)));
    if (diff > 1e-6)
      throw std::invalid_argument(
          "spectral_family: protovalue requires on-policy xi (deviation " +
          std::to_string(diff) + ")");
  }

  const Matrix k = symmetrized_transition(pm, space);
  const SelfAdjointEig eig = self_adjoint_eig(k, space);

  Representation rep;
  rep.gamma = gamma;
  rep.requested_d = d;
  rep.is_orthogonal = true;

  if (variant == SpectralVariant::SafeEigSymm) {
    rep.method = ReprMethod::SafeEigSymm;
    const std::size_t dstar = safe_spectral_index(eig.eigenvalues, gamma);
    if (dstar > n) throw std::invalid_argument("spectral_family: empty safe set");
    const std::size_t take = std::min(d, n - dstar + 1);
    rep.phi = eig.vectors.cols_range(dstar - 1, take);
    rep.effective_d = take;
    if (take < d)
      rep.notes.push_back("safe set truncated to " + std::to_string(take) + " features");
  } else {
    rep.method = (variant == SpectralVariant::ProtoValue) ? ReprMethod::ProtoValue
                                                          : ReprMethod::EigSymm;
    rep.phi = eig.vectors.cols_range(0, d);
    rep.effective_d = d;
  }
  return rep;
}

Representation svd_family(const PolicyMatrix& pm, const WeightedSpace& space, std::size_t d,
                          double gamma, SvdVariant variant) {
  const std::size_t n = pm.p_pi.rows();
  if (d == 0 || d > n) throw std::invalid_argument("svd_family: d out of range");

  Matrix target;
  if (variant == SvdVariant::Svd) {
    target = pm.p_pi;
  } else {
    Matrix a = Matrix::identity(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) a(i, j) -= gamma * pm.p_pi(i, j);
    target = LuFactorization(a).solve(Matrix::identity(n));  // successor representation
  }

  const WeightedSvd svd = weighted_svd(target, space, d);
  Representation rep;
  rep.method = (variant == SvdVariant::Svd) ? ReprMethod::Svd : ReprMethod::SvdSr;
  rep.phi = svd.u;
  rep.is_orthogonal = true;
  rep.effective_d = d;
  rep.requested_d = d;
  rep.gamma = gamma;
  rep.svd = SvdFactors{svd.u, svd.sigma, svd.v};
  return rep;
}

Representation schur_representation(const PolicyMatrix& pm, const WeightedSpace& space,
                                    std::size_t d) {
  const std::size_t n = pm.p_pi.rows();
  if (d == 0 || d > n) throw std::invalid_argument("schur_representation: d out of range");
  const WeightedSchur ws = real_schur(pm.p_pi, space);
  const std::size_t eff = ws.aligned_size(d);
  Representation rep;
  rep.method = ReprMethod::Schur;
  rep.phi = ws.basis.cols_range(0, eff);
  rep.is_orthogonal = true;
  rep.effective_d = eff;
  rep.requested_d = d;
  if (eff != d)
    rep.notes.push_back("d rounded up to " + std::to_string(eff) + " to keep a conjugate pair");
  return rep;
}

Representation krylov_family(const PolicyMatrix& pm, const WeightedSpace& space,
                             const Vector& reward, std::size_t d, KrylovVariant variant) {
  const std::size_t n = pm.p_pi.rows();
  if (d == 0 || d > n) throw std::invalid_argument("krylov_family: d out of range");
  if (reward.size() != n) throw std::invalid_argument("krylov_family: reward length mismatch");
  const double rnorm = weighted_norm(reward, space);
  if (rnorm == 0.0) throw std::invalid_argument("krylov_family: zero reward vector");

  // Columns P^k r, each normalized to unit Xi-norm to keep powers in range.
  Matrix cols(n, d);
  Vector v = scale(1.0 / rnorm, reward);
  cols.set_col(0, v);
  for (std::size_t k = 1; k < d; ++k) {
    v = pm.p_pi * v;
    const double nv = weighted_norm(v, space);
    if (nv == 0.0) {
      cols = cols.cols_range(0, k);
      break;
    }
    v = scale(1.0 / nv, v);
    cols.set_col(k, v);
  }

  // Effective dimension: the first numerically dependent column ends the
  // chain (Krylov spaces are nested, so later ones are dependent too).
  std::size_t rank = 0;
  const Matrix q = euclidean_orthonormalize(space.whiten_basis(cols), &rank);
  Representation rep;
  rep.requested_d = d;
  rep.effective_d = rank;
  if (rank < d)
    rep.notes.push_back("krylov chain terminated at dimension " + std::to_string(rank));
  if (variant == KrylovVariant::OrthogKrylov) {
    rep.method = ReprMethod::OrthogKrylov;
    rep.phi = space.unwhiten_basis(q);
    rep.is_orthogonal = true;
  } else {
    rep.method = ReprMethod::Krylov;
    rep.phi = cols.cols_range(0, rank);
    rep.is_orthogonal = (rank == 1);  // a single unit column is orthogonal
  }
  return rep;
}

void validate_representation(const Representation& rep, const WeightedSpace& space) {
  if (rep.phi.cols() != rep.effective_d)
    throw std::invalid_argument("representation: effective_d does not match phi");
  if (relative_rank_gap(rep.phi, space) < 1e-10)
    throw std::invalid_argument("representation: rank-deficient phi");
  if (rep.is_orthogonal) {
    const Matrix w = space.whiten_basis(rep.phi);
    const Matrix gram = w.transpose() * w;
    for (std::size_t i = 0; i < gram.rows(); ++i)
      for (std::size_t j = 0; j < gram.cols(); ++j) {
        const double want = (i == j) ? 1.0 : 0.0;
        if (std::abs(gram(i, j) - want) > 1e-8)
          throw std::invalid_argument("representation: orthogonality violated");
      }
  }
}

}  // namespace stablerepr
