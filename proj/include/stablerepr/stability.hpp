#pragma once

#include <optional>

#include "stablerepr/representations.hpp"

namespace stablerepr {

/// TD fixed point does not exist (A_Phi singular). Deliberately distinct
/// from a stability verdict: a representation can be unstable with a
/// perfectly well-defined fixed point and vice versa.
struct SingularFixedPointError : NumericalError {
  using NumericalError::NumericalError;
};

constexpr double kStabilityMargin = 1e-9;

struct IterationMatrix {
  Matrix a_phi;  // d x d
  double gamma = 0.0;
};

/// A_Phi = Phiᵀ Xi (I - gamma P) Phi, the matrix driving the expected TD(0)
/// parameter dynamics.
IterationMatrix iteration_matrix(const Matrix& phi, const PolicyMatrix& pm,
                                 const WeightedSpace& space, double gamma);
IterationMatrix iteration_matrix(const Representation& rep, const PolicyMatrix& pm,
                                 const WeightedSpace& space, double gamma);

struct StabilityReport {
  Spectrum spectrum;
  double min_real_part = 0.0;
  bool stable = false;
  bool marginal = false;  // |min Re| within the margin band
  std::optional<double> max_step_size;
  double margin = kStabilityMargin;
};

/// Stable iff every eigenvalue real part exceeds the margin; the largest
/// safe step size is min Re(lambda)/|lambda|^2 and is verified to contract.
StabilityReport stability_report(const IterationMatrix& im, double margin = kStabilityMargin);

struct InducedSpectrumReport {
  Spectrum spectrum;  // of Pi P Pi, zeros included
  bool stable = false;
  bool was_orthogonalized = false;  // input was reparametrized first
  bool agrees_with_iteration_matrix = false;
};

/// Induced-transition test: stable iff max Re Spec(Pi P Pi) < 1/gamma.
/// Non-orthogonal inputs are orthogonalized first (flag recorded); the
/// verdict is cross-checked against the iteration-matrix route.
InducedSpectrumReport induced_spectrum_check(const Representation& rep, const PolicyMatrix& pm,
                                             const WeightedSpace& space, double gamma);

struct SrSpectrumReport {
  Spectrum spectrum;  // of the rank-d successor approximation
  bool stable = false;
};

/// Successor-representation test: every eigenvalue of the rank-d
/// approximation must have positive real part or be (numerically) zero.
SrSpectrumReport svd_sr_spectrum_check(const Representation& rep, const PolicyMatrix& pm,
                                       const WeightedSpace& space, double gamma);

/// Largest Xi-relative leakage of P out of Span(phi):
/// max_{v in Span} ‖Pi P v − P v‖_Xi / ‖v‖_Xi.
double epsilon_invariance(const Matrix& phi, const PolicyMatrix& pm, const WeightedSpace& space);
double epsilon_invariance(const Representation& rep, const PolicyMatrix& pm,
                          const WeightedSpace& space);

struct KrylovEpsilon {
  double epsilon = 0.0;
  bool exact_invariance = false;  // degenerate chain, leakage is exactly 0
};

/// Leakage evaluated at the single maximizing direction
/// v = (I − Pi_{d-1}) P^{d-1} r of the reward Krylov space.
KrylovEpsilon krylov_epsilon(const PolicyMatrix& pm, const WeightedSpace& space,
                             const Vector& reward, std::size_t d);

struct InvarianceBound {
  std::optional<double> bound;  // (1-gamma)/(gamma*kappa) when diagonalizable
  std::optional<double> kappa;
  bool diagonalizable = false;
};

/// Sufficient epsilon threshold for stability of orthogonal representations
/// when the transition matrix is diagonalizable.
InvarianceBound invariance_stability_bound(const PolicyMatrix& pm, const WeightedSpace& space,
                                           double gamma, double kappa_cap = 1e12);

struct PositiveDefiniteReport {
  bool is_pd = false;
  double min_sym_eig = 0.0;
};

/// Positive definiteness of the symmetric part of A_Phi; invariant under
/// reparametrization of phi.
PositiveDefiniteReport positive_definite_check(const Matrix& phi, const PolicyMatrix& pm,
                                               const WeightedSpace& space, double gamma);
PositiveDefiniteReport positive_definite_check(const Representation& rep, const PolicyMatrix& pm,
                                               const WeightedSpace& space, double gamma);

struct UnsafeTopBasisReport {
  bool applicable = false;       // false when no eigenvalue of K exceeds 1/gamma
  std::size_t d_star = 1;        // 1-based first safe index
  bool confirmed_unstable = false;  // all iteration-matrix eigenvalues in Re<0
  double max_real_part = 0.0;
};

/// Checks that the basis of above-threshold eigenvectors of K drives every
/// iteration-matrix eigenvalue into the left half plane.
UnsafeTopBasisReport unsafe_top_basis_check(const PolicyMatrix& pm, const WeightedSpace& space,
                                            double gamma);

/// theta* solving A_Phi theta = Phiᵀ Xi r. Throws SingularFixedPointError
/// when no fixed point exists.
Vector td_fixed_point(const Matrix& phi, const PolicyMatrix& pm, const WeightedSpace& space,
                      const Vector& reward, double gamma);
Vector td_fixed_point(const Representation& rep, const PolicyMatrix& pm,
                      const WeightedSpace& space, const Vector& reward, double gamma);

struct QualityReport {
  double policy_accuracy = 0.0;
  double optimal_projection_error = 0.0;
  std::optional<double> bellman_projection_error;  // empty: no TD fixed point
};

/// Appendix-style quality metrics. All three are properties of Span(phi)
/// and are evaluated in orthonormal coordinates for conditioning.
QualityReport evaluate_quality(const Representation& rep, const PolicyMatrix& pm,
                               const WeightedSpace& space, const Mdp& mdp);

}  // namespace stablerepr
