#include "stablerepr/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stablerepr {

namespace {

// (I - gamma P) Phi without forming the n x n factor.
Matrix bellman_factor_times(const PolicyMatrix& pm, double gamma, const Matrix& phi) {
  Matrix out = pm.p_pi * phi;
  out *= -gamma;
  for (std::size_t i = 0; i < phi.rows(); ++i)
    for (std::size_t j = 0; j < phi.cols(); ++j) out(i, j) += phi(i, j);
  return out;
}

Matrix xi_scaled(const Matrix& m, const WeightedSpace& space) {
  Matrix out = m;
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) *= space.xi(i);
  return out;
}

Vector phi_t_xi_vector(const Matrix& phi, const WeightedSpace& space, const Vector& v) {
  Vector scaled(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) scaled[i] = space.xi(i) * v[i];
  return phi.transpose() * scaled;
}

}  // namespace

IterationMatrix iteration_matrix(const Matrix& phi, const PolicyMatrix& pm,
                                 const WeightedSpace& space, double gamma) {
  if (phi.rows() != pm.p_pi.rows() || phi.rows() != space.dim())
    throw std::invalid_argument("iteration_matrix: dimension mismatch");
  const Matrix rhs = bellman_factor_times(pm, gamma, phi);
  return IterationMatrix{phi.transpose() * xi_scaled(rhs, space), gamma};
}

IterationMatrix iteration_matrix(const Representation& rep, const PolicyMatrix& pm,
                                 const WeightedSpace& space, double gamma) {
  return iteration_matrix(rep.phi, pm, space, gamma);
}

StabilityReport stability_report(const IterationMatrix& im, double margin) {
  StabilityReport rep;
  rep.margin = margin;
  rep.spectrum = general_eigenvalues(im.a_phi);
  rep.min_real_part = rep.spectrum.min_real_part();
  rep.stable = rep.min_real_part > margin;
  rep.marginal = !rep.stable && rep.min_real_part > -margin;
  if (rep.stable) {
    double eta = std::numeric_limits<double>::infinity();
    for (const auto& z : rep.spectrum.eigenvalues)
      eta = std::min(eta, z.real() / std::norm(z));
    rep.max_step_size = eta;
    // rho(I - 0.99 eta A) < 1 must hold; verify.
    const double step = 0.99 * eta;
    Matrix m = im.a_phi;
    m *= -step;
    for (std::size_t i = 0; i < m.rows(); ++i) m(i, i) += 1.0;
    if (general_eigenvalues(m).spectral_radius() >= 1.0)
      throw NumericalError("stability_report: contraction check failed at the derived step size");
  }
  return rep;
}

InducedSpectrumReport induced_spectrum_check(const Representation& rep, const PolicyMatrix& pm,
                                             const WeightedSpace& space, double gamma) {
  InducedSpectrumReport out;
  Matrix phi = rep.phi;
  if (!rep.is_orthogonal) {
    phi = orthogonalize(phi, space).columns;
    out.was_orthogonalized = true;
  }
  const std::size_t n = pm.p_pi.rows();
  const std::size_t d = phi.cols();

  // Spec(Pi P Pi) = Spec(Phiᵀ Xi P Phi) plus n-d zeros, by cyclicity of the
  // spectrum with Pi = Phi Phiᵀ Xi.
  const Matrix core = phi.transpose() * xi_scaled(pm.p_pi * phi, space);
  Spectrum s = general_eigenvalues(core);
  s.eigenvalues.resize(n, Complex(0.0, 0.0));
  out.spectrum = s;

  out.stable = s.max_real_part() < (1.0 - kStabilityMargin) / gamma;

  const StabilityReport via_iteration =
      stability_report(iteration_matrix(phi, pm, space, gamma));
  out.agrees_with_iteration_matrix = (via_iteration.stable == out.stable);
  return out;
}

SrSpectrumReport svd_sr_spectrum_check(const Representation& rep, const PolicyMatrix& pm,
                                       const WeightedSpace& space, double gamma) {
  (void)gamma;
  if (rep.method != ReprMethod::SvdSr || !rep.svd)
    throw std::invalid_argument("svd_sr_spectrum_check: representation lacks SVD provenance");
  const auto& f = *rep.svd;
  const std::size_t n = pm.p_pi.rows();
  const std::size_t d = f.sigma.size();

  // Psi_hat = U Sigma Vᵀ Xi: nonzero spectrum equals that of
  // Sigma Vᵀ Xi U (d x d), padded with zeros.
  Matrix core = f.v.transpose() * xi_scaled(f.u, space);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) core(i, j) *= f.sigma[i];
  // Note: (Sigma Vᵀ) Xi U row-scales by sigma.
  Spectrum s = general_eigenvalues(core);
  s.eigenvalues.resize(n, Complex(0.0, 0.0));

  SrSpectrumReport out;
  out.spectrum = s;
  const double zero_tol = 1e-12 * (f.sigma.empty() ? 1.0 : f.sigma.front());
  out.stable = true;
  for (const auto& z : s.eigenvalues) {
    if (std::abs(z) <= zero_tol) continue;
    if (z.real() <= kStabilityMargin) {
      out.stable = false;
      break;
    }
  }
  return out;
}

double epsilon_invariance(const Matrix& phi, const PolicyMatrix& pm, const WeightedSpace& space) {
  const Matrix ortho = orthogonalize(phi, space).columns;
  const Matrix pphi = pm.p_pi * ortho;
  // (I - Pi) P Phi' with Pi = Phi' Phi'ᵀ Xi.
  const Matrix leak = pphi - ortho * (ortho.transpose() * xi_scaled(pphi, space));
  const SvdResult s = singular_value_decompose(space.whiten_basis(leak));
  return s.sigma.empty() ? 0.0 : s.sigma.front();
}

double epsilon_invariance(const Representation& rep, const PolicyMatrix& pm,
                          const WeightedSpace& space) {
  return epsilon_invariance(rep.phi, pm, space);
}

KrylovEpsilon krylov_epsilon(const PolicyMatrix& pm, const WeightedSpace& space,
                             const Vector& reward, std::size_t d) {
  if (d == 0) throw std::invalid_argument("krylov_epsilon: d must be positive");
  const Representation full = krylov_family(pm, space, reward, d, KrylovVariant::OrthogKrylov);
  if (full.effective_d < d) return KrylovEpsilon{0.0, true};  // degenerate chain

  // v = (I - Pi_{d-1}) P^{d-1} r; with the orthonormal chain this is exactly
  // the last basis direction, but recompute it from the definition.
  Vector pw = reward;
  for (std::size_t k = 0; k + 1 < d; ++k) pw = pm.p_pi * pw;
  Vector v = pw;
  if (d > 1) {
    const Matrix prefix = full.phi.cols_range(0, d - 1);
    const Vector coeff = phi_t_xi_vector(prefix, space, pw);
    const Vector proj = prefix * coeff;
    v = subtract(pw, proj);
  }
  const double vn = weighted_norm(v, space);
  if (vn <= 1e-12 * std::max(1.0, weighted_norm(pw, space))) return KrylovEpsilon{0.0, true};

  const Vector pv = pm.p_pi * v;
  const Vector coeff = phi_t_xi_vector(full.phi, space, pv);
  const Vector proj = full.phi * coeff;
  const double leak = weighted_norm(subtract(proj, pv), space);
  return KrylovEpsilon{leak / vn, false};
}

InvarianceBound invariance_stability_bound(const PolicyMatrix& pm, const WeightedSpace& space,
                                           double gamma, double kappa_cap) {
  // Eigenbasis in whitened coordinates with unit columns; its Euclidean
  // condition number equals kappa_Xi of the corresponding state-space basis.
  const RealSchurResult schur = real_schur_decompose(space.whiten(pm.p_pi), false);
  const auto vecs = eigenvectors_from_schur(schur);
  const std::size_t n = pm.p_pi.rows();
  Matrix re(n, n), im(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      re(i, j) = vecs[i][j].real();
      im(i, j) = vecs[i][j].imag();
    }
  InvarianceBound out;
  double kappa;
  try {
    kappa = complex_condition_number(re, im);
  } catch (const NumericalError&) {
    return out;  // defective: no bound
  }
  if (!std::isfinite(kappa) || kappa >= kappa_cap) return out;
  out.diagonalizable = true;
  out.kappa = kappa;
  out.bound = (1.0 - gamma) / (gamma * kappa);
  return out;
}

PositiveDefiniteReport positive_definite_check(const Matrix& phi, const PolicyMatrix& pm,
                                               const WeightedSpace& space, double gamma) {
  const IterationMatrix im = iteration_matrix(phi, pm, space, gamma);
  const std::size_t d = im.a_phi.rows();
  Matrix sym(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) sym(i, j) = 0.5 * (im.a_phi(i, j) + im.a_phi(j, i));
  const SymmetricEig eig = symmetric_eigen(sym);
  PositiveDefiniteReport out;
  out.min_sym_eig = eig.eigenvalues.back();
  out.is_pd = out.min_sym_eig > 0.0;
  return out;
}

PositiveDefiniteReport positive_definite_check(const Representation& rep, const PolicyMatrix& pm,
                                               const WeightedSpace& space, double gamma) {
  return positive_definite_check(rep.phi, pm, space, gamma);
}

UnsafeTopBasisReport unsafe_top_basis_check(const PolicyMatrix& pm, const WeightedSpace& space,
                                            double gamma) {
  const Matrix k = symmetrized_transition(pm, space);
  const SelfAdjointEig eig = self_adjoint_eig(k, space);
  const std::size_t dstar = safe_spectral_index(eig.eigenvalues, gamma);
  UnsafeTopBasisReport out;
  out.d_star = std::min(dstar, eig.eigenvalues.size() + 1);
  if (dstar <= 1) return out;  // no eigenvalue above the threshold
  out.applicable = true;
  const Matrix unsafe = eig.vectors.cols_range(0, dstar - 1);
  const StabilityReport sr = stability_report(iteration_matrix(unsafe, pm, space, gamma));
  out.max_real_part = sr.spectrum.max_real_part();
  out.confirmed_unstable = out.max_real_part < 0.0;
  return out;
}

Vector td_fixed_point(const Matrix& phi, const PolicyMatrix& pm, const WeightedSpace& space,
                      const Vector& reward, double gamma) {
  const IterationMatrix im = iteration_matrix(phi, pm, space, gamma);
  const Vector b = phi_t_xi_vector(phi, space, reward);
  // Natural magnitude of A_Phi entries; pivot ratios alone cannot flag a
  // singular 1x1 matrix.
  double gram_trace = 0.0;
  for (std::size_t j = 0; j < phi.cols(); ++j) {
    const double c = weighted_norm(phi.col(j), space);
    gram_trace += c * c;
  }
  const double scale = (1.0 + gamma) * gram_trace / static_cast<double>(phi.cols());
  try {
    LuFactorization lu(im.a_phi);
    if (lu.nearly_singular(1e-12) || lu.min_pivot() <= 1e-12 * scale)
      throw SingularFixedPointError("td_fixed_point: iteration matrix is singular");
    Vector theta = lu.solve(b);
    const Vector resid = subtract(im.a_phi * theta, b);
    if (norm_inf(resid) > 1e-10 * (1.0 + norm_inf(b)))
      throw NumericalError("td_fixed_point: residual too large");
    return theta;
  } catch (const SingularFixedPointError&) {
    throw;
  } catch (const NumericalError& e) {
    throw SingularFixedPointError(std::string("td_fixed_point: ") + e.what());
  }
}

Vector td_fixed_point(const Representation& rep, const PolicyMatrix& pm,
                      const WeightedSpace& space, const Vector& reward, double gamma) {
  return td_fixed_point(rep.phi, pm, space, reward, gamma);
}

QualityReport evaluate_quality(const Representation& rep, const PolicyMatrix& pm,
                               const WeightedSpace& space, const Mdp& mdp) {
  const double gamma = mdp.discount;
  const Vector q_true = compute_value_function(pm, mdp.reward, gamma);

  // All three metrics depend only on Span(phi); use the orthonormal basis.
  const Matrix phi =
      rep.is_orthogonal ? rep.phi : orthogonalize(rep.phi, space).columns;

  const Vector coeff = phi_t_xi_vector(phi, space, q_true);
  const Vector q_proj = phi * coeff;
  QualityReport out;
  out.optimal_projection_error = weighted_norm(subtract(q_true, q_proj), space);

  Vector q_hat;
  try {
    const Vector theta = td_fixed_point(phi, pm, space, mdp.reward, gamma);
    q_hat = phi * theta;
    out.bellman_projection_error = weighted_norm(subtract(q_true, q_hat), space);
  } catch (const SingularFixedPointError&) {
    q_hat.clear();
  }

  // Greedy-set agreement, ties resolved by intersection with a relative
  // tolerance band.
  if (!q_hat.empty()) {
    std::size_t hits = 0;
    for (std::size_t s = 0; s < mdp.n_states; ++s) {
      double mt = -std::numeric_limits<double>::infinity();
      double mh = mt;
      for (std::size_t a = 0; a < mdp.n_actions; ++a) {
        mt = std::max(mt, q_true[mdp.pair_index(s, a)]);
        mh = std::max(mh, q_hat[mdp.pair_index(s, a)]);
      }
      const double tol_t = 1e-9 * (1.0 + std::abs(mt));
      const double tol_h = 1e-9 * (1.0 + std::abs(mh));
      bool agree = false;
      for (std::size_t a = 0; a < mdp.n_actions && !agree; ++a) {
        const std::size_t h = mdp.pair_index(s, a);
        agree = (q_true[h] >= mt - tol_t) && (q_hat[h] >= mh - tol_h);
      }
      if (agree) ++hits;
    }
    out.policy_accuracy = static_cast<double>(hits) / static_cast<double>(mdp.n_states);
  } else {
    out.policy_accuracy = 0.0;
  }
  return out;
}

}  // namespace stablerepr
