#pragma once

#include "stablerepr/stability.hpp"

namespace stablerepr {

enum class TdOutcome { Converged, Diverged, Undecided };

struct TdLogEntry {
  long step = 0;
  double residual_norm = 0.0;  // ‖theta - theta*‖ (or ‖theta‖ when no fixed point)
  double theta_norm = 0.0;
};

struct TdRunResult {
  Vector final_theta;
  std::vector<TdLogEntry> residual_log;
  TdOutcome outcome = TdOutcome::Undecided;
  long steps_taken = 0;
};

struct TdTolerances {
  double convergence_tol = 1e-8;  // relative to 1 + ‖theta*‖ unless absolute
  bool tol_is_absolute = false;
  double divergence_factor = 1e6;  // diverged when ‖theta‖ > factor*(1+‖theta0‖)
  long log_interval = 100;
};

/// Deterministic expected TD(0): theta <- theta - eta (A_Phi theta - Phiᵀ Xi r).
/// Divergence is an outcome, not an error. When A_Phi is singular the
/// residual log tracks ‖theta‖ instead and the run cannot converge.
TdRunResult expected_td0(const Matrix& phi, const PolicyMatrix& pm, const WeightedSpace& space,
                         const Vector& reward, double gamma, double eta, const Vector& theta0,
                         long max_steps, const TdTolerances& tol = {});
TdRunResult expected_td0(const Representation& rep, const PolicyMatrix& pm,
                         const WeightedSpace& space, const Vector& reward, double gamma,
                         double eta, const Vector& theta0, long max_steps,
                         const TdTolerances& tol = {});

struct EtaSchedule {
  double eta0 = 0.1;
  double tau = 1e4;  // eta_k = eta0 / (1 + k/tau); tau <= 0 means constant
  double at(long k) const { return tau > 0 ? eta0 / (1.0 + static_cast<double>(k) / tau) : eta0; }
};

/// Stochastic TD(0) over sampled transitions (s,a) ~ xi, s' ~ P(.|s,a),
/// a' ~ pi(.|s'). Reproducible under the seed.
TdRunResult stochastic_td0(const Mdp& mdp, const Matrix& eval_policy, const Vector& behavior_xi,
                           const Matrix& phi, const WeightedSpace& space,
                           const EtaSchedule& schedule, long steps, std::uint64_t rng_seed,
                           const TdTolerances& tol = {});

}  // namespace stablerepr
