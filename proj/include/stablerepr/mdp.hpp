#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "stablerepr/linalg.hpp"
#include "stablerepr/rng.hpp"

namespace stablerepr {

/// Finite MDP over states S and actions A. State-action pairs are indexed
/// row-major, h = s * n_actions + a, and functions of (s,a) live in R^n with
/// n = |S||A|.
struct Mdp {
  std::size_t n_states = 0;
  std::size_t n_actions = 0;
  Matrix transition;    // (n_states*n_actions) x n_states, row h = P(.|s,a)
  Vector reward;        // length n_states*n_actions
  Vector initial_dist;  // length n_states
  double discount = 0.0;

  std::size_t num_pairs() const { return n_states * n_actions; }
  std::size_t pair_index(std::size_t s, std::size_t a) const { return s * n_actions + a; }

  /// Checks row-stochasticity (1e-12), initial distribution, discount range.
  void validate() const;
};

/// Markov chain on state-action pairs induced by a policy, together with the
/// data-distribution weights used for analysis. xi defaults to uniform until
/// a data distribution is attached.
struct PolicyMatrix {
  Matrix p_pi;    // n x n row-stochastic over H
  Vector xi;      // strictly positive, sums to 1
  Matrix policy;  // n_states x n_actions

  void validate() const;
};

struct TrajectoryStep {
  std::size_t state;
  std::size_t action;
  double reward;
  std::size_t next_state;
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;
  std::uint64_t seed = 0;
  std::size_t episode_id = 0;
};

/// Uniform floor (default 1e-8) followed by renormalization, making the
/// vector usable as an invertible weight matrix.
Vector floor_distribution(const Vector& v, double floor = 1e-8);

/// p_pi[(s,a),(s',a')] = P(s'|s,a) * policy(a'|s'). xi is left uniform.
PolicyMatrix build_policy_matrix(const Mdp& mdp, const Matrix& policy);

/// Replaces pm.xi with the floored, renormalized weights.
void attach_xi(PolicyMatrix& pm, const Vector& xi, double floor = 1e-8);

/// Q = (I - discount * P)^{-1} r. Residual is checked to 1e-10.
Vector compute_value_function(const PolicyMatrix& pm, const Vector& reward, double discount);

struct OptimalValues {
  Vector q_star;                           // over H
  std::vector<std::size_t> greedy_action;  // per state, lowest-index ties
};

/// Value iteration to the optimal Q, stopping when the Bellman-optimality
/// residual is provably below tolerance.
OptimalValues value_iteration_optimal(const Mdp& mdp, double tolerance = 1e-10);

/// Greedy action keeps mass 1-eps+eps/|A|, every action gets eps/|A|.
/// Ties go to the lowest action index.
Matrix epsilon_greedy(const Vector& q, double epsilon, std::size_t n_states,
                      std::size_t n_actions);

/// Variant that splits the greedy mass uniformly over the argmax set
/// (relative tie tolerance 1e-9). Used for the benchmark's evaluated policy
/// so that symmetric optimal actions stay symmetric.
Matrix epsilon_greedy_tied(const Vector& q, double epsilon, std::size_t n_states,
                           std::size_t n_actions);

/// Left eigenvector of p_pi for eigenvalue 1, by power iteration with an
/// identity-damping fallback on detected periodicity. Entries may be zero
/// (floor afterwards before using as weights).
Vector stationary_distribution(const PolicyMatrix& pm, std::size_t max_iters = 100000);

std::vector<Trajectory> sample_trajectories(const Mdp& mdp, const Matrix& behavior_policy,
                                            std::size_t length, std::size_t count,
                                            std::uint64_t rng_seed);

/// Raw sufficient statistics for the empirical model. counts(h, s') holds
/// observed (or injected) transition weight, visits(h) the visitation
/// weight of h in the data.
struct TransitionCounts {
  Matrix counts;  // (S*A) x S
  Vector visits;  // S*A
};

TransitionCounts count_transitions(const std::vector<Trajectory>& trajectories,
                                   std::size_t n_states, std::size_t n_actions);

/// Exact-count injection: the infinite-data limit of count_transitions under
/// visitation weights `xi` (any full-support vector works).
TransitionCounts exact_counts(const Mdp& mdp, const Vector& xi);

struct EmpiricalModel {
  Matrix p_hat;   // H x H, rows composed with the evaluated policy
  Vector xi_hat;  // floored normalized visitation
};

/// Visited rows become empirical next-state frequencies composed with the
/// evaluated policy; unvisited (s,a) fall back to the self-loop prior
/// composed with the same policy.
EmpiricalModel empirical_model(const TransitionCounts& counts, const Matrix& eval_policy,
                               std::size_t n_states, std::size_t n_actions,
                               double xi_floor = 1e-8);

/// The four-room gridworld: 104 free cells on an 11x11 interior, 4 cardinal
/// actions, +1 reward on every action taken from the top-right goal cell,
/// discount 0.99, start at the center of the bottom-left room.
Mdp fourroom();

/// Grid coordinates (row, col) of each four-room state, for inspection.
std::vector<std::pair<std::size_t, std::size_t>> fourroom_cells();

/// Two-state chain (one action) where state 1 feeds into the absorbing
/// state 2; with features (1, 2) and uniform weights this is the classic
/// divergence example for off-policy TD.
Mdp two_state_counterexample();

}  // namespace stablerepr
